#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "physguard/signal.hpp"

namespace physguard {

enum class WavEncoding { pcm16, float32 };

// Mono PCM16 or IEEE float32 (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel
// files are rejected with FormatError.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wav,
               WavEncoding encoding = WavEncoding::float32);

// ".emb": "EMB1" header (u32 T, u32 D, u32 frame_rate_hz) + little-endian f32
// frames. Anything else is read as CSV, one frame per row.
EmbeddingSequence read_embedding(const std::filesystem::path& path,
                                 double csv_frame_rate = kDefaultFrameRate);
void write_embedding_binary(const std::filesystem::path& path, const EmbeddingSequence& emb);
void write_embedding_csv(const std::filesystem::path& path, const EmbeddingSequence& emb);

struct ManifestRecord {
  std::string source_id;
  Label label = Label::unknown;
  std::filesystem::path wav_path;
  std::filesystem::path emb_path;
};

// JSON-lines. Relative paths are resolved against the manifest's directory.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

// Writes to a sibling temporary and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace physguard
