#include "nflab/ladder.hpp"

#include <cmath>
#include <map>

#include "nflab/error.hpp"

namespace nflab {
namespace {

int parse_mode(const std::string& symbol, std::size_t prefix, int modes) {
  if (symbol.size() == prefix) return 0;
  std::size_t used = 0;
  int mode = -1;
  try {
    mode = std::stoi(symbol.substr(prefix), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != symbol.size() - prefix || mode < 0 || mode >= modes)
    throw InvalidInput("ladder symbol '" + symbol + "' names an invalid mode");
  return mode;
}

CMatrix harmonic_lowering(const SpectralModel& model, int mode) {
  const Index n = model.buffer_dim();
  std::map<std::vector<int>, Index> lookup;
  for (Index a = 0; a < n; ++a) lookup.emplace(model.labels()[a], a);
  CMatrix out = CMatrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    std::vector<int> label = model.labels()[a];
    if (label[mode] == 0) continue;
    const double amp = std::sqrt(static_cast<double>(label[mode]));
    --label[mode];
    out(lookup.at(label), a) = amp;
  }
  return out;
}

CMatrix zoll_shift(const SpectralModel& model) {
  const Index n = model.buffer_dim();
  std::map<std::vector<int>, Index> lookup;
  for (Index a = 0; a < n; ++a) lookup.emplace(model.labels()[a], a);
  CMatrix out = CMatrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    std::vector<int> label = model.labels()[a];
    ++label[0];
    auto it = lookup.find(label);
    if (it != lookup.end()) out(it->second, a) = 1.0;
  }
  return out;
}

}  // namespace

CMatrix ladder_symbol(const SpectralModel& model, const std::string& symbol) {
  const Index n = model.buffer_dim();
  if (symbol == "I") return CMatrix::Identity(n, n);
  if (symbol.rfind("K0^", 0) == 0) {
    double power = 0.0;
    try {
      power = std::stod(symbol.substr(3));
    } catch (const std::exception&) {
      throw InvalidInput("ladder symbol '" + symbol + "' has an invalid power");
    }
    const RVector d = model.k0_eigs().array().pow(power);
    return d.cast<Complex>().asDiagonal();
  }

  switch (model.kind()) {
    case ModelKind::harmonic: {
      const int modes = model.modes();
      if (symbol.rfind("ad", 0) == 0) return harmonic_lowering(model, parse_mode(symbol, 2, modes)).adjoint();
      if (symbol[0] == 'a') return harmonic_lowering(model, parse_mode(symbol, 1, modes));
      if (symbol[0] == 'x') {
        const CMatrix a = harmonic_lowering(model, parse_mode(symbol, 1, modes));
        return (a + a.adjoint()) / std::sqrt(2.0);
      }
      if (symbol[0] == 'p') {
        const CMatrix a = harmonic_lowering(model, parse_mode(symbol, 1, modes));
        return kI * (a.adjoint() - a) / std::sqrt(2.0);
      }
      if (symbol[0] == 'n') {
        const CMatrix a = harmonic_lowering(model, parse_mode(symbol, 1, modes));
        return a.adjoint() * a;
      }
      break;
    }
    case ModelKind::anharmonic: {
      const RMatrix& v = model.hermite_vectors();
      if (symbol == "x" || symbol == "x0")
        return (v.transpose() * model.hermite_position() * v).cast<Complex>();
      if (symbol == "p" || symbol == "p0")
        return kI * (v.transpose() * model.hermite_momentum_over_i() * v).cast<Complex>();
      break;
    }
    case ModelKind::zoll: {
      if (symbol == "S") return zoll_shift(model);
      if (symbol == "Sd") return zoll_shift(model).adjoint();
      break;
    }
  }
  throw InvalidInput("ladder symbol '" + symbol + "' is not defined on a " + to_string(model.kind()) + " model");
}

CMatrix ladder_word(const SpectralModel& model, std::span<const std::string> word) {
  const Index n = model.buffer_dim();
  CMatrix out = CMatrix::Identity(n, n);
  for (const auto& symbol : word) out = out * ladder_symbol(model, symbol);
  return out;
}

CMatrix position_operator(const SpectralModel& model, int mode) {
  return ladder_symbol(model, "x" + std::to_string(mode));
}

}  // namespace nflab
