#include "rfa/hardware_source.hpp"

#include <mutex>

#include "rfa/error.hpp"

namespace rfa {
namespace {

std::mutex g_adapter_mutex;
std::shared_ptr<HardwareAdapter> g_adapter;

}  // namespace

void register_hardware_adapter(std::shared_ptr<HardwareAdapter> adapter) {
  std::lock_guard lock(g_adapter_mutex);
  g_adapter = std::move(adapter);
}

bool hardware_adapter_registered() {
  std::lock_guard lock(g_adapter_mutex);
  return g_adapter != nullptr;
}

std::unique_ptr<BlockSource> open_hardware_source(const CaptureSettings& settings) {
  validate(settings);
  std::shared_ptr<HardwareAdapter> adapter;
  {
    std::lock_guard lock(g_adapter_mutex);
    adapter = g_adapter;
  }
  if (!adapter) throw UnsupportedSourceError("hardware source not available");
  return adapter->open(settings);
}

}  // namespace rfa
