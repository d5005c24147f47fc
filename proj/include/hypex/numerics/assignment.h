// Copyright 2026 The hypex Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYPEX_NUMERICS_ASSIGNMENT_H_
#define HYPEX_NUMERICS_ASSIGNMENT_H_

#include <vector>

#include <Eigen/Core>

namespace hypex::numerics {

struct AssignmentResult {
  // column_of_row[i] is the column (control) assigned to row (treated) i.
  std::vector<int> column_of_row;
  // Sum of cost(i, column_of_row[i]) accumulated in row order.
  double total_cost = 0.0;
};

// Rectangular linear assignment: each of the n_t rows gets a distinct column
// out of n_c >= n_t, minimizing the total cost. Solved exactly by successive
// shortest augmenting paths with dual potentials (Hungarian family),
// O(n_t^2 n_c). Throws InfeasibleError when n_t > n_c.
AssignmentResult assignment_min_cost(const Eigen::MatrixXd& cost);

}  // namespace hypex::numerics

#endif  // HYPEX_NUMERICS_ASSIGNMENT_H_
