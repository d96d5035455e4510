#pragma once

#include <memory>

#include "rfa/source.hpp"

namespace rfa {

// Embedders plug radio drivers in here. None ship with this library.
class HardwareAdapter {
 public:
  virtual ~HardwareAdapter() = default;
  virtual std::unique_ptr<BlockSource> open(const CaptureSettings& settings) = 0;
};

// Process-wide adapter slot. Passing nullptr unregisters.
void register_hardware_adapter(std::shared_ptr<HardwareAdapter> adapter);
bool hardware_adapter_registered();

// Validates settings (ConfigError), then opens the registered adapter or throws
// UnsupportedSourceError("hardware source not available").
std::unique_ptr<BlockSource> open_hardware_source(const CaptureSettings& settings);

}  // namespace rfa
