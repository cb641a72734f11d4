// SPDX-License-Identifier: Apache-2.0
//
// isacsim — deterministic ray-traced channel simulation and radio sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Clutter suppression on channel tensors, applied before sensing. Two
// procedures: reference subtraction (a measured background H_ref is removed
// element-wise) and dynamic tap gating (delay-domain taps whose first-to-last
// symbol difference stays under a threshold are zeroed as static).

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "isac/channel.hpp"
#include "isac/common.hpp"
#include "isac/dsp.hpp"
#include "isac/sensing.hpp"

namespace isac {

/// Element-wise H - H_ref.
inline ChannelFrame remove_reference(const ChannelFrame& h, const ChannelFrame& h_ref) {
    if (!h.same_shape(h_ref))
        throw DimensionMismatchError("remove_reference: tensor shapes differ");
    ChannelFrame out = h;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= h_ref.data[i];
    return out;
}

/// Zero every delay tap that does not move between the first and the last
/// OFDM symbol. Per antenna: the delay profiles of symbol 0 and symbol
/// N_symb-1 are compared; taps with |h_first - h_last| <= epsilon * max|h_first|
/// are zeroed across all symbols, and the tensor is transformed back to the
/// subcarrier domain.
inline ChannelFrame remove_dynamic(const ChannelFrame& h, double epsilon = 0.01) {
    if (h.num_symbols < 2)
        throw DimensionTooSmallError("remove_dynamic: need at least 2 symbols");

    const int n_sub = h.num_subcarriers;
    const int n_symb = h.num_symbols;
    ChannelFrame out = h;

    std::vector<cplx> column(n_sub);
    for (int m = 0; m < h.num_antennas; ++m) {
        auto profile_of = [&](int symbol) {
            for (int k = 0; k < n_sub; ++k) column[k] = h.at(m, k, symbol);
            return delay_profile(column);
        };
        std::vector<cplx> first = profile_of(0);
        std::vector<cplx> last = profile_of(n_symb - 1);

        double max_tap = 0.0;
        for (const auto& v : first) max_tap = std::max(max_tap, std::abs(v));
        double threshold = epsilon * max_tap;

        std::vector<bool> keep(n_sub);
        for (int t = 0; t < n_sub; ++t) keep[t] = std::abs(first[t] - last[t]) > threshold;

        for (int n = 0; n < n_symb; ++n) {
            for (int k = 0; k < n_sub; ++k) column[k] = h.at(m, k, n);
            std::vector<cplx> taps = idft(column);
            for (int t = 0; t < n_sub; ++t)
                taps[t] = keep[t] ? taps[t] / double(n_sub) : cplx{0.0, 0.0};
            std::vector<cplx> spectrum = dft(taps);
            for (int k = 0; k < n_sub; ++k) out.at(m, k, n) = spectrum[k];
        }
    }
    return out;
}

} // namespace isac
