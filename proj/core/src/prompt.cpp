#include "rfa/prompt.hpp"

#include "rfa/util.hpp"

namespace rfa {

const std::string_view kSystemPrompt =
    "You are an expert RF signal analyzer. Analyze the spectrogram image provided and "
    "respond concisely. Do not repeat the question or any preamble. Output your analysis "
    "directly and stop when done.";

Prompt build_prompt(const CaptureSettings& settings) {
  Prompt p;
  p.system_text = std::string(kSystemPrompt);
  p.user_text =
      "Current analyzer settings:\n"
      "  - Center frequency: " + format_mhz(settings.center_freq_hz) + " MHz\n"
      "  - Sample rate: " + format_mhz(settings.sample_rate_hz) + " MHz\n"
      "\n"
      "Analyze this RF spectrogram and identify any signals present.\n"
      "\n"
      "Please identify:\n"
      "  1. Signal type(s)\n"
      "  2. Estimated bandwidth\n"
      "  3. Notable characteristics\n"
      "  4. Confidence level\n"
      "\n"
      "Provide your analysis in a structured format.";
  return p;
}

}  // namespace rfa
