#pragma once

#include "subdetector/gradcore/ops.hpp"
#include "subdetector/series/windows.hpp"

namespace subdetector {

// zs: [N, S, F], weights: [N, S] -> sum_s softmax(weights_i)_s * zs[i, s]: [N, F].
grad::Var select_length(grad::Var zs, grad::Var weights);

// Plain average over the S scales.
grad::Var average_lengths(grad::Var zs);

// zs[:, s, :] only.
grad::Var single_length(grad::Var zs, std::size_t s);

// Scale index whose prefix length is closest to `length` (shorter wins ties).
std::size_t nearest_scale(const WindowConfig& config, std::size_t length);

}  // namespace subdetector
