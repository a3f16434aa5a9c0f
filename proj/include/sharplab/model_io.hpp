#pragma once

#include <filesystem>

#include "json.hpp"

#include "sharplab/network.hpp"

namespace sharplab {

/// Binary model layout (integers and doubles little-endian):
///   bytes 0–7  magic "SLMLP\0\0\0"
///   u32        format version (1)
///   u32        layer count L+1
///   u64[L+1]   layer sizes N(0)…N(L)
///   u8         hidden activation tag (0 identity, 1 relu, 2 tanh, 3 softmax)
///   u8         output activation tag
///   u16        reserved, 0
///   per layer l = 1…L: f64[N(l-1)·N(l)] weights row-major, then f64[N(l)] biases
void save_model(const Mlp& net, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

/// Architecture summary plus caller-supplied `extra` fields, written next to
/// the binary as `<path>.json`.
nlohmann::json model_metadata(const Mlp& net, const nlohmann::json& extra = nlohmann::json::object());
void save_model_with_metadata(const Mlp& net, const std::filesystem::path& path,
                              const nlohmann::json& extra = nlohmann::json::object());

}  // namespace sharplab
