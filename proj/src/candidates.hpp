#pragma once

#include "oed/rng.hpp"
#include "oed/selection.hpp"

#include <algorithm>
#include <chrono>

namespace oed::detail {

/// Yields the ascending list of indices a greedy step may scan.
class CandidatePicker {
 public:
  CandidatePicker(Index m, const CandidateOptions& options)
      : m_(m), fixed_(options.candidates), subsample_(options.subsample), rng_(options.seed) {
    if (fixed_) {
      std::sort(fixed_->begin(), fixed_->end());
      fixed_->erase(std::unique(fixed_->begin(), fixed_->end()), fixed_->end());
    }
  }

  IndexList next(const std::vector<bool>& in_design) {
    IndexList out;
    if (fixed_) {
      for (Index i : *fixed_)
        if (!in_design[static_cast<std::size_t>(i)]) out.push_back(i);
    } else {
      for (Index i = 0; i < m_; ++i)
        if (!in_design[static_cast<std::size_t>(i)]) out.push_back(i);
    }
    if (subsample_ && *subsample_ < static_cast<Index>(out.size())) {
      const auto keep = static_cast<std::size_t>(*subsample_);
      for (std::size_t j = 0; j < keep; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng_.uniform_index(out.size() - j));
        std::swap(out[j], out[pick]);
      }
      out.resize(keep);
      std::sort(out.begin(), out.end());
    }
    return out;
  }

 private:
  Index m_;
  std::optional<IndexList> fixed_;
  std::optional<Index> subsample_;
  Rng rng_;
};

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_design_request(Index m, Index n, const CandidateOptions& options);

}  // namespace oed::detail
