// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>

#include "granum/nn/network.hpp"

namespace granum::nn {

inline constexpr int kWeightFormatVersion = 1;

/// Writes the text weight document:
///
///   granum-weights <version>
///   meta <key> <value>            (zero or more)
///   input <d0> <d1> ...
///   layers <count>
///   layer <kind> [key=value ...]  (per layer, followed by its params)
///   param <name> <d0> <d1> ...
///   <row-major values, 17 significant digits, space separated>
///   end
void write_network(std::ostream &os, const Network &net);
/// Parses a document written by write_network. Throws PersistenceError on
/// version mismatch, truncation or malformed content.
Network read_network(std::istream &is);

void save_network(const Network &net, const std::filesystem::path &path);
Network load_network(const std::filesystem::path &path);

/// Copies the parameters from a document into an existing network. Throws
/// ShapeError when the stored layer plan differs from the network's.
void load_parameters_into(Network &net, std::istream &is);

} // namespace granum::nn
