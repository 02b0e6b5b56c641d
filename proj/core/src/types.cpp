#include "riskstop/types.hpp"

#include <algorithm>

namespace riskstop {

const char* to_string(TimeMode mode) {
  return mode == TimeMode::Discrete ? "discrete" : "continuous";
}

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {}

StateSpace StateSpace::indexed(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back("S" + std::to_string(i));
  return StateSpace(std::move(labels));
}

std::optional<std::size_t> StateSpace::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

double sup_distance(const ValueFunction& a, const ValueFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_distance: dimension mismatch");
  if (a.size() == 0) return 0.0;
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

StoppingRegion StoppingRegion::from_indices(std::size_t n, const std::vector<std::size_t>& indices) {
  StoppingRegion r(n);
  for (auto i : indices) {
    if (i >= n) throw std::out_of_range("StoppingRegion: state index out of range");
    r.member_[i] = true;
  }
  return r;
}

StoppingRegion StoppingRegion::from_mask(std::size_t n, unsigned long long mask) {
  StoppingRegion r(n);
  for (std::size_t i = 0; i < n; ++i) r.member_[i] = ((mask >> i) & 1ULL) != 0;
  return r;
}

StoppingRegion StoppingRegion::all(std::size_t n) {
  StoppingRegion r(n);
  std::fill(r.member_.begin(), r.member_.end(), true);
  return r;
}

bool StoppingRegion::empty() const {
  return std::none_of(member_.begin(), member_.end(), [](bool b) { return b; });
}

std::size_t StoppingRegion::size() const {
  return static_cast<std::size_t>(std::count(member_.begin(), member_.end(), true));
}

std::vector<std::size_t> StoppingRegion::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < member_.size(); ++i)
    if (member_[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> StoppingRegion::complement() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < member_.size(); ++i)
    if (!member_[i]) out.push_back(i);
  return out;
}

}  // namespace riskstop
