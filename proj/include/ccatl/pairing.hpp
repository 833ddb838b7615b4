#pragma once

#include <iosfwd>
#include <vector>

#include "ccatl/imputation.hpp"
#include "ccatl/tabular.hpp"

namespace ccatl {

struct Pair {
  Index source = 0;
  Index target = 0;
  double distance = 0.0;
  int round = 0;  // matching round in which the pair was fixed
};

struct PairedViews {
  Matrix source_rows;  // M x |F_U|, row i matched with target_rows row i
  Matrix target_rows;
  Labels labels;
  std::vector<Pair> pairs;  // ordered by target id
};

// N x M Euclidean distances between source rows and target rows.
Matrix distance_matrix(const Matrix& source, const Matrix& target);
Matrix distance_matrix(const UnifiedPair& u);

// Greedy round-based nearest pairing. Each round every unpaired target proposes its nearest
// free source; a contested source goes to the closest proposer (ties: smaller target id),
// losers retry next round. With `supervised`, pairing runs separately inside each label class.
std::vector<Pair> nearest_pairs(const Matrix& source, const Labels& source_labels, const Matrix& target,
                                const Labels& target_labels, bool supervised);

PairedViews nearest_pairing(const UnifiedPair& u, bool supervised = true);

void write_pairs_csv(std::ostream& out, const std::vector<Pair>& pairs);
std::vector<Pair> read_pairs_csv(std::istream& in);

}  // namespace ccatl
