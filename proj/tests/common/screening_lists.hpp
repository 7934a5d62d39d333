// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

// Screening inputs shared by the unit and acceptance tests: 28 solvents and
// 30 salts (3 cations x 10 anions), all inside the supported SMILES subset.

#pragma once

#include <string>
#include <vector>

namespace molsets::testing {

inline std::vector<std::string> screening_solvents() {
  return {"C1=CC=CC=C1", "COCOC",       "C1CC1",         "COCCOC",     "CC1=CC=CC=C1", "CC1CCCO1",   "C1CCOC1",
          "C1COC(=O)O1", "CC1COC(=O)O1", "COC(=O)OC",    "CCOC(=O)OCC", "CC#N",        "CCO",        "CCCO",
          "CC(C)O",      "CC(=O)C",     "CS(=O)C",       "CCOCC",      "OCCO",         "CC(=O)OC",   "CN(C)C=O",
          "ClCCl",       "CCCCO",       "CC(=O)OCC",     "CCCC#N",     "O=C1CCCO1",    "CN1CCCC1=O", "FC(F)(F)COCC(F)(F)F"};
}

inline std::vector<std::string> screening_salts() {
  const std::vector<std::string> cations{"[Li+]", "[Na+]", "[K+]"};
  const std::vector<std::string> anions{
      "F[P-](F)(F)(F)(F)F",
      "F[B-](F)(F)F",
      "[O-]Cl(=O)(=O)=O",
      "FC(F)(F)S(=O)(=O)[N-]S(=O)(=O)C(F)(F)F",
      "FS(=O)(=O)[N-]S(=O)(=O)F",
      "[O-]S(=O)(=O)C(F)(F)F",
      "[O-][N+](=O)[O-]",
      "[Cl-]",
      "[Br-]",
      "[I-]"};
  std::vector<std::string> salts;
  for (const auto& c : cations) {
    for (const auto& a : anions) salts.push_back(c + "." + a);
  }
  return salts;
}

}  // namespace molsets::testing
