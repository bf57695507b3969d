#include "mutner/mutation_type.hpp"

namespace mutner {

namespace {

struct TypeNames {
  std::string_view canonical;
  std::string_view short_form;
  std::string_view display;
};

constexpr std::array<TypeNames, kNumMutationTypes> kNames = {{
    {"Substitution", "Sub", "Substitution"},
    {"Deletion", "Del", "Deletion"},
    {"Insertion", "Ins", "Insertion"},
    {"Duplication", "Dup", "Duplication"},
    {"InDel", "InDel", "InDel"},
    {"SNP", "SNP", "SNP"},
    {"FrameShift", "FS", "Frame Shift"},
}};

}  // namespace

std::string_view short_name(MutationType t) { return kNames[index_of(t)].short_form; }
std::string_view display_name(MutationType t) { return kNames[index_of(t)].display; }
std::string_view canonical_name(MutationType t) { return kNames[index_of(t)].canonical; }

std::optional<MutationType> parse_mutation_type(std::string_view name) {
  for (std::size_t i = 0; i < kNumMutationTypes; ++i) {
    if (name == kNames[i].canonical || name == kNames[i].short_form) {
      return kAllMutationTypes[i];
    }
  }
  return std::nullopt;
}

}  // namespace mutner
