#pragma once

#include "evolab/common.hpp"

namespace evolab {

/// Unnormalized in-place DFT of every column: X_m = sum_k x_k exp(sign*2*pi*i*m*k/n).
void dft_columns(MatC& data, int sign, Exec exec = Exec::Parallel);

}  // namespace evolab
