#include "layoutmask/maskgen.hpp"

#include <cctype>
#include <stdexcept>

namespace layoutmask {

void TokenLabels::validate() const {
  if (labels.empty()) {
    throw std::invalid_argument("token labels must not be empty");
  }
  for (auto v : labels) {
    if (v > 1) throw std::invalid_argument("token label must be 0 or 1");
  }
}

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'' || c == '-') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

std::vector<std::string> tokenize_prompt(std::string_view prompt) {
  std::vector<std::string> tokens;
  tokens.emplace_back(kBeginToken);
  for (auto& w : split_words(prompt)) tokens.push_back(std::move(w));
  tokens.emplace_back(kEndToken);
  return tokens;
}

TokenLabels label_tokens(std::string_view prompt, std::string_view fg_phrase) {
  const auto tokens = tokenize_prompt(prompt);
  const auto phrase = split_words(fg_phrase);
  if (phrase.empty()) {
    throw std::invalid_argument("foreground phrase is empty");
  }
  TokenLabels out{std::vector<std::uint8_t>(tokens.size(), 0)};
  // Markers sit at both ends, so only the word range is searched.
  for (std::size_t start = 1; start + phrase.size() < tokens.size(); ++start) {
    bool match = true;
    for (std::size_t k = 0; k < phrase.size() && match; ++k) {
      match = tokens[start + k] == phrase[k];
    }
    if (match) {
      for (std::size_t k = 0; k < phrase.size(); ++k) out.labels[start + k] = 1;
      return out;
    }
  }
  throw std::invalid_argument("foreground phrase '" + std::string(fg_phrase) +
                              "' does not occur in the prompt");
}

BinaryMatrix xnor_mask(std::span<const std::uint8_t> rows_fg,
                       std::span<const std::uint8_t> cols_fg) {
  BinaryMatrix m(rows_fg.size(), cols_fg.size());
  for (std::size_t i = 0; i < rows_fg.size(); ++i) {
    const std::uint8_t a = rows_fg[i] != 0;
    for (std::size_t j = 0; j < cols_fg.size(); ++j) {
      m(i, j) = a == (cols_fg[j] != 0) ? 1 : 0;
    }
  }
  return m;
}

BinaryMatrix build_cross_mask(std::span<const std::uint8_t> frame_fg,
                              const TokenLabels& tokens) {
  return xnor_mask(frame_fg, tokens.labels);
}

BinaryMatrix build_spatial_mask(std::span<const std::uint8_t> frame_fg) {
  return xnor_mask(frame_fg, frame_fg);
}

BinaryMatrix build_temporal_mask(std::span<const std::uint8_t> pixel_fg) {
  return xnor_mask(pixel_fg, pixel_fg);
}

const char* family_name(MaskFamily family) {
  switch (family) {
    case MaskFamily::kCross:
      return "cross";
    case MaskFamily::kSpatial:
      return "spatial";
    case MaskFamily::kTemporal:
      return "temporal";
  }
  return "unknown";
}

const std::vector<BinaryMatrix>& AttentionMaskBundle::family(
    MaskFamily f) const {
  switch (f) {
    case MaskFamily::kCross:
      return cross;
    case MaskFamily::kSpatial:
      return spatial;
    case MaskFamily::kTemporal:
      return temporal;
  }
  throw std::invalid_argument("unknown mask family");
}

AttentionMaskBundle build_bundle(const FrameMaskSet& masks,
                                 const TokenLabels& tokens,
                                 AblationFlags ablation) {
  tokens.validate();
  if (masks.num_frames() < 1 || masks.num_latents() < 1) {
    throw std::invalid_argument("frame masks must not be empty");
  }
  const int frames = masks.num_frames();
  const std::size_t latents = masks.num_latents();
  const std::size_t text = tokens.size();

  AttentionMaskBundle b;
  b.ablation = ablation;
  b.cross.reserve(frames);
  b.spatial.reserve(frames);
  b.temporal.reserve(latents);

  bool has_fg_token = false, has_bg_token = false;
  for (auto t : tokens.labels) (t ? has_fg_token : has_bg_token) = true;

  for (int f = 0; f < frames; ++f) {
    const auto fg = masks.frame(f);
    b.cross.push_back(ablation.cross ? build_cross_mask(fg, tokens)
                                     : BinaryMatrix::ones(latents, text));
    b.spatial.push_back(ablation.spatial ? build_spatial_mask(fg)
                                         : BinaryMatrix::ones(latents, latents));
    if (ablation.cross) {
      const std::size_t n_fg = masks.count_foreground(f);
      const bool empty_row = (n_fg > 0 && !has_fg_token) ||
                             (n_fg < latents && !has_bg_token);
      if (empty_row) b.frames_with_empty_cross_rows.push_back(f);
    }
  }
  const auto uframes = static_cast<std::size_t>(frames);
  for (std::size_t i = 0; i < latents; ++i) {
    b.temporal.push_back(ablation.temporal
                             ? build_temporal_mask(masks.pixel_track(i))
                             : BinaryMatrix::ones(uframes, uframes));
  }
  return b;
}

AttentionMaskBundle all_ones_bundle(int num_frames, std::size_t num_latents,
                                    std::size_t num_tokens) {
  AttentionMaskBundle b;
  b.ablation = AblationFlags::all_off();
  const auto uframes = static_cast<std::size_t>(num_frames);
  b.cross.assign(uframes, BinaryMatrix::ones(num_latents, num_tokens));
  b.spatial.assign(uframes, BinaryMatrix::ones(num_latents, num_latents));
  b.temporal.assign(num_latents, BinaryMatrix::ones(uframes, uframes));
  return b;
}

}  // namespace layoutmask
