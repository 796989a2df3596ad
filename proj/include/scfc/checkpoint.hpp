#pragma once

#include <iosfwd>
#include <string>

#include "scfc/layers.hpp"
#include "scfc/sgd.hpp"

namespace scfc {

// Versioned binary container: architecture descriptors, SgdConfig, then raw
// row-major weight bytes. save -> load -> forward is bit-identical.
void save_stack(std::ostream& out, LayerStack& stack, const SgdConfig& cfg);
void load_stack(std::istream& in, LayerStack& stack, SgdConfig& cfg);

void save_stack_file(const std::string& path, LayerStack& stack, const SgdConfig& cfg);
void load_stack_file(const std::string& path, LayerStack& stack, SgdConfig& cfg);

}  // namespace scfc
