#include "ccatl/pairing.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "ccatl/error.hpp"

namespace ccatl {

Matrix distance_matrix(const Matrix& source, const Matrix& target) {
  if (source.cols() != target.cols()) throw InputError("distance_matrix: width mismatch");
  Matrix d(source.rows(), target.rows());
  for (Index j = 0; j < target.rows(); ++j)
    for (Index i = 0; i < source.rows(); ++i) d(i, j) = (source.row(i) - target.row(j)).norm();
  return d;
}

Matrix distance_matrix(const UnifiedPair& u) { return distance_matrix(u.source.values, u.target.values); }

namespace {

void pair_block(const Matrix& source, const Matrix& target, const std::vector<Index>& src_ids,
                const std::vector<Index>& tgt_ids, std::vector<Pair>& out) {
  Matrix src(static_cast<Index>(src_ids.size()), source.cols());
  Matrix tgt(static_cast<Index>(tgt_ids.size()), target.cols());
  for (std::size_t i = 0; i < src_ids.size(); ++i) src.row(static_cast<Index>(i)) = source.row(src_ids[i]);
  for (std::size_t j = 0; j < tgt_ids.size(); ++j) tgt.row(static_cast<Index>(j)) = target.row(tgt_ids[j]);
  const Matrix dist = distance_matrix(src, tgt);

  std::vector<bool> taken(src_ids.size(), false);
  std::vector<std::size_t> open(tgt_ids.size());
  for (std::size_t j = 0; j < open.size(); ++j) open[j] = j;

  int round = 0;
  while (!open.empty()) {
    ++round;
    // source slot -> (distance, target slot) of the current best contender
    std::map<std::size_t, std::pair<double, std::size_t>> winners;
    for (std::size_t t : open) {
      std::size_t best = src_ids.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < src_ids.size(); ++s) {
        if (taken[s]) continue;
        const double d = dist(static_cast<Index>(s), static_cast<Index>(t));
        if (d < best_d || best == src_ids.size()) {
          best = s;
          best_d = d;
        }
      }
      auto it = winners.find(best);
      if (it == winners.end() || best_d < it->second.first) winners[best] = {best_d, t};
    }
    std::vector<bool> matched(tgt_ids.size(), false);
    for (const auto& [s, win] : winners) {
      taken[s] = true;
      matched[win.second] = true;
      out.push_back({src_ids[s], tgt_ids[win.second], win.first, round});
    }
    std::erase_if(open, [&](std::size_t t) { return matched[t]; });
  }
}

}  // namespace

std::vector<Pair> nearest_pairs(const Matrix& source, const Labels& source_labels, const Matrix& target,
                                const Labels& target_labels, bool supervised) {
  if (target.rows() < 1) throw InputError("pairing: target is empty");
  if (target.rows() > source.rows())
    throw InputError("pairing: target has more rows (" + std::to_string(target.rows()) + ") than source (" +
                     std::to_string(source.rows()) + ")");
  std::vector<Pair> out;
  if (!supervised) {
    std::vector<Index> s(static_cast<std::size_t>(source.rows())), t(static_cast<std::size_t>(target.rows()));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<Index>(i);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Index>(i);
    pair_block(source, target, s, t, out);
  } else {
    for (int cls : {0, 1}) {
      std::vector<Index> s, t;
      for (Index i = 0; i < source.rows(); ++i)
        if (source_labels(i) == cls) s.push_back(i);
      for (Index i = 0; i < target.rows(); ++i)
        if (target_labels(i) == cls) t.push_back(i);
      if (t.empty()) continue;
      if (t.size() > s.size())
        throw InputError("pairing: class " + std::to_string(cls) + " has " + std::to_string(t.size()) +
                         " target rows but only " + std::to_string(s.size()) + " source rows");
      pair_block(source, target, s, t, out);
    }
  }
  std::sort(out.begin(), out.end(), [](const Pair& a, const Pair& b) { return a.target < b.target; });
  return out;
}

PairedViews nearest_pairing(const UnifiedPair& u, bool supervised) {
  if (!u.source.complete() || !u.target.complete()) throw InputError("pairing: inputs must be fully imputed");
  PairedViews p;
  p.pairs = nearest_pairs(u.source.values, u.source.labels, u.target.values, u.target.labels, supervised);
  const auto m = static_cast<Index>(p.pairs.size());
  p.source_rows.resize(m, u.source.cols());
  p.target_rows.resize(m, u.target.cols());
  p.labels.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto& pr = p.pairs[static_cast<std::size_t>(i)];
    p.source_rows.row(i) = u.source.values.row(pr.source);
    p.target_rows.row(i) = u.target.values.row(pr.target);
    p.labels(i) = u.target.labels(pr.target);
  }
  return p;
}

void write_pairs_csv(std::ostream& out, const std::vector<Pair>& pairs) {
  out << "source_id,target_id,distance,round\n";
  for (const auto& p : pairs)
    out << p.source << ',' << p.target << ',' << format_double(p.distance) << ',' << p.round << '\n';
}

std::vector<Pair> read_pairs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "source_id,target_id,distance,round")
    throw InputError("pairs csv: bad header");
  std::vector<Pair> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c, r;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    std::getline(ss, r);
    Pair p;
    double v;
    if (!parse_double(a, v)) throw InputError("pairs csv: bad source id");
    p.source = static_cast<Index>(v);
    if (!parse_double(b, v)) throw InputError("pairs csv: bad target id");
    p.target = static_cast<Index>(v);
    if (!parse_double(c, p.distance)) throw InputError("pairs csv: bad distance");
    if (!parse_double(r, v)) throw InputError("pairs csv: bad round");
    p.round = static_cast<int>(v);
    out.push_back(p);
  }
  return out;
}

}  // namespace ccatl
