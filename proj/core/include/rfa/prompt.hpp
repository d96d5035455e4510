#pragma once

#include <string>
#include <string_view>

#include "rfa/source.hpp"

namespace rfa {

struct Prompt {
  std::string system_text;
  std::string user_text;
};

extern const std::string_view kSystemPrompt;

// The fixed analysis prompt. Only the centre frequency and sample rate are
// substituted; nothing else about the capture reaches the model as text.
Prompt build_prompt(const CaptureSettings& settings);

}  // namespace rfa
