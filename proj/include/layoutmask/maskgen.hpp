#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layoutmask/binary_matrix.hpp"
#include "layoutmask/geometry.hpp"

namespace layoutmask {

// Foreground indicator per text token (1 = part of the foreground phrase).
struct TokenLabels {
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  void validate() const;
  bool operator==(const TokenLabels&) const = default;
};

// Tokens of a prompt as seen by the mask builder: a begin marker, the
// lower-cased words, and an end marker.
std::vector<std::string> tokenize_prompt(std::string_view prompt);

inline constexpr std::string_view kBeginToken = "<bos>";
inline constexpr std::string_view kEndToken = "<eos>";

// Labels the first occurrence of fg_phrase in the tokenized prompt. Begin/end
// markers are always background. Throws std::invalid_argument when the phrase
// does not occur.
TokenLabels label_tokens(std::string_view prompt, std::string_view fg_phrase);

struct AblationFlags {
  bool cross = true;
  bool spatial = true;
  bool temporal = true;

  static AblationFlags all_off() { return {false, false, false}; }
  bool operator==(const AblationFlags&) const = default;
};

// XNOR of two indicator vectors: out[i, j] = 1 iff rows_fg[i] == cols_fg[j].
BinaryMatrix xnor_mask(std::span<const std::uint8_t> rows_fg,
                       std::span<const std::uint8_t> cols_fg);

// Pixel-to-token mask of one frame (l_latents x l_text).
BinaryMatrix build_cross_mask(std::span<const std::uint8_t> frame_fg,
                              const TokenLabels& tokens);
// Pixel-to-pixel mask of one frame (l_latents x l_latents).
BinaryMatrix build_spatial_mask(std::span<const std::uint8_t> frame_fg);
// Frame-to-frame mask of one latent pixel (l_video x l_video).
BinaryMatrix build_temporal_mask(std::span<const std::uint8_t> pixel_fg);

enum class MaskFamily : std::uint8_t { kCross = 0, kSpatial = 1, kTemporal = 2 };

const char* family_name(MaskFamily family);

// The three mask families of one video. A disabled family holds all-ones
// matrices of the same shapes.
struct AttentionMaskBundle {
  std::vector<BinaryMatrix> cross;     // one per frame
  std::vector<BinaryMatrix> spatial;   // one per frame
  std::vector<BinaryMatrix> temporal;  // one per latent pixel
  AblationFlags ablation;
  // Frames whose cross mask has at least one all-zero row (every token carries
  // the other label). Attention falls back to the unmasked row there.
  std::vector<int> frames_with_empty_cross_rows;

  int num_frames() const { return static_cast<int>(cross.size()); }
  std::size_t num_latents() const {
    return cross.empty() ? 0 : cross.front().rows();
  }
  std::size_t num_tokens() const {
    return cross.empty() ? 0 : cross.front().cols();
  }
  const std::vector<BinaryMatrix>& family(MaskFamily f) const;

  bool operator==(const AttentionMaskBundle&) const = default;
};

AttentionMaskBundle build_bundle(const FrameMaskSet& masks,
                                 const TokenLabels& tokens,
                                 AblationFlags ablation = {});

// Bundle with every family disabled, shaped for the given sizes.
AttentionMaskBundle all_ones_bundle(int num_frames, std::size_t num_latents,
                                    std::size_t num_tokens);

}  // namespace layoutmask
