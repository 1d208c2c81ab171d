#ifndef SOS_PROMPTS_HPP
#define SOS_PROMPTS_HPP

#include <string>
#include <string_view>

namespace sos {

struct DatasetRecord;

enum class PromptKind { kPlain, kSimple, kReasoning };

std::string to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

// The instruction block for a tier, without polynomial or answer directive.
const std::string& instruction_text(PromptKind kind);

// Appended to every tier.
const std::string& answer_directive();

// instruction + polynomial + answer directive. The polynomial appears once.
std::string render_prompt(std::string_view polynomial, PromptKind kind);
std::string render_prompt(const DatasetRecord& record, PromptKind kind);

enum class Extracted { kSos, kNotSos, kInvalid };

std::string to_string(Extracted e);
Extracted extracted_from_string(const std::string& s);

// The last "ANSWER:" line wins. Without one, the last affirmative or negative SoS
// phrase decides; nothing recognizable gives kInvalid.
Extracted extract_verdict(std::string_view response);

}  // namespace sos

#endif  // SOS_PROMPTS_HPP
