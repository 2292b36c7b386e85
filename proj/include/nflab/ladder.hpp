#pragma once

#include <span>
#include <string>

#include "nflab/spectral_model.hpp"

namespace nflab {

/// Elementary operators on a model's buffer, in its K0 eigenbasis.
///
/// Symbols (j is a mode index, default 0):
///   harmonic   : a<j>, ad<j> (raising), x<j>, p<j>, n<j> (number)
///   anharmonic : x, p (position/momentum rotated into the eigenbasis)
///   zoll       : S (level n -> n+1), Sd (adjoint)
///   any model  : K0^<power>, I
CMatrix ladder_symbol(const SpectralModel& model, const std::string& symbol);

/// Product of symbols, applied as written (leftmost symbol is the leftmost factor).
CMatrix ladder_word(const SpectralModel& model, std::span<const std::string> word);

/// Convenience: x_j on a harmonic model.
CMatrix position_operator(const SpectralModel& model, int mode = 0);

}  // namespace nflab
