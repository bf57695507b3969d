#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mutner {

// Base error type for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Declaration order is significant: it fixes label indices, report column
// order and tie-break order everywhere.
enum class MutationType : int {
  Substitution = 0,
  Deletion,
  Insertion,
  Duplication,
  InDel,
  SNP,
  FrameShift,
};

inline constexpr std::size_t kNumMutationTypes = 7;

inline constexpr std::array<MutationType, kNumMutationTypes> kAllMutationTypes = {
    MutationType::Substitution, MutationType::Deletion, MutationType::Insertion,
    MutationType::Duplication,  MutationType::InDel,    MutationType::SNP,
    MutationType::FrameShift,
};

inline constexpr std::size_t index_of(MutationType t) { return static_cast<std::size_t>(t); }

// Short tag name used in tag strings ("B-Sub") and alias tables.
std::string_view short_name(MutationType t);
// Full display name used in reports ("Frame Shift").
std::string_view display_name(MutationType t);
// Canonical identifier ("FrameShift").
std::string_view canonical_name(MutationType t);

// Accepts canonical or short names; nullopt otherwise.
std::optional<MutationType> parse_mutation_type(std::string_view name);

}  // namespace mutner
