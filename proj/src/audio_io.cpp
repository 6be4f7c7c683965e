#include "physguard/audio_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "physguard/errors.hpp"

namespace physguard {

namespace fs = std::filesystem;
using detail::get_f32;
using detail::get_u32;
using detail::put_f32;
using detail::put_u16;
using detail::put_u32;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::uint16_t u16_at(const std::string& buf, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(buf[off]) |
                                    static_cast<unsigned char>(buf[off + 1]) << 8);
}

std::uint32_t u32_at(const std::string& buf, std::size_t off) {
  return static_cast<std::uint32_t>(u16_at(buf, off)) |
         static_cast<std::uint32_t>(u16_at(buf, off + 2)) << 16;
}

}  // namespace

Waveform read_wav(const fs::path& path) {
  std::ifstream in = open_in(path);
  const std::string what = "WAV " + path.string();
  char riff[12];
  if (!in.read(riff, 12) || std::string_view(riff, 4) != "RIFF" ||
      std::string_view(riff + 8, 4) != "WAVE")
    throw FormatError(what + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  for (;;) {
    char id[4];
    if (!in.read(id, 4)) throw FormatError(what + ": no data chunk");
    const std::uint32_t size = get_u32(in, what);
    const std::string_view chunk(id, 4);
    if (chunk == "fmt ") {
      if (size < 16) throw FormatError(what + ": fmt chunk too small");
      std::string fmt(size, '\0');
      if (!in.read(fmt.data(), size)) throw FormatError(what + ": truncated fmt chunk");
      format = u16_at(fmt, 0);
      channels = u16_at(fmt, 2);
      rate = u32_at(fmt, 4);
      bits = u16_at(fmt, 14);
      if (format == 0xFFFE) {
        if (size < 26) throw FormatError(what + ": truncated extensible fmt chunk");
        format = u16_at(fmt, 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw FormatError(what + ": data chunk before fmt chunk");
      if (channels != 1)
        throw FormatError(what + ": " + std::to_string(channels) +
                          " channels; only mono input is supported");
      if (rate == 0) throw FormatError(what + ": zero sample rate");
      Waveform wav;
      wav.sample_rate = rate;
      if (format == 1 && bits == 16) {
        wav.samples.resize(size / 2);
        std::string raw(size - size % 2, '\0');
        if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
          throw FormatError(what + ": truncated data chunk");
        for (std::size_t i = 0; i < wav.samples.size(); ++i)
          wav.samples[i] = static_cast<float>(static_cast<std::int16_t>(u16_at(raw, 2 * i))) / 32768.0f;
      } else if (format == 3 && bits == 32) {
        wav.samples.resize(size / 4);
        for (float& s : wav.samples) s = get_f32(in, what);
      } else {
        throw FormatError(what + ": unsupported encoding (format " + std::to_string(format) +
                          ", " + std::to_string(bits) + " bits); need PCM16 or float32");
      }
      return wav;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
  }
}

void write_wav(const fs::path& path, const Waveform& wav, WavEncoding encoding) {
  std::ostringstream out(std::ios::binary);
  const bool pcm = encoding == WavEncoding::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * (bits / 8));
  const auto rate = static_cast<std::uint32_t>(std::lround(wav.sample_rate));
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, pcm ? 1 : 3);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (float s : wav.samples) {
    if (pcm) {
      const long q = std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      put_f32(out, s);
    }
  }
  write_file_atomic(path, out.str());
}

EmbeddingSequence read_embedding(const fs::path& path, double csv_frame_rate) {
  std::ifstream in = open_in(path);
  const std::string what = "embedding " + path.string();
  if (path.extension() == ".emb") {
    detail::expect_magic(in, "EMB1", what);
    const std::uint32_t t = get_u32(in, what);
    const std::uint32_t d = get_u32(in, what);
    const std::uint32_t rate = get_u32(in, what);
    if (rate == 0) throw FormatError(what + ": zero frame rate");
    Matrix frames(t, d);
    for (double& v : frames.data()) v = get_f32(in, what);
    return EmbeddingSequence(std::move(frames), rate);
  }

  Matrix frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw FormatError(what + ": bad number on line " + std::to_string(line_no));
      row.push_back(v);
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end && *p == ',') ++p;
    }
    if (!frames.empty() && row.size() != frames.cols())
      throw FormatError(what + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " columns, expected " +
                        std::to_string(frames.cols()));
    frames.append_row(row);
  }
  return EmbeddingSequence(std::move(frames), csv_frame_rate);
}

void write_embedding_binary(const fs::path& path, const EmbeddingSequence& emb) {
  std::ostringstream out(std::ios::binary);
  out.write("EMB1", 4);
  put_u32(out, static_cast<std::uint32_t>(emb.length()));
  put_u32(out, static_cast<std::uint32_t>(emb.dims()));
  put_u32(out, static_cast<std::uint32_t>(std::lround(emb.frame_rate())));
  for (double v : emb.frames().data()) put_f32(out, static_cast<float>(v));
  write_file_atomic(path, out.str());
}

void write_embedding_csv(const fs::path& path, const EmbeddingSequence& emb) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < emb.length(); ++r) {
    auto row = emb.frames().row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      out += buf;
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRecord rec;
      rec.source_id = j.at("source_id").get<std::string>();
      rec.label = parse_label(j.value("label", std::string("unknown")));
      rec.wav_path = j.at("wav_path").get<std::string>();
      rec.emb_path = j.at("emb_path").get<std::string>();
      if (rec.wav_path.is_relative()) rec.wav_path = base / rec.wav_path;
      if (rec.emb_path.is_relative()) rec.emb_path = base / rec.emb_path;
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return records;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
  const fs::path base = path.parent_path();
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["source_id"] = r.source_id;
    j["label"] = to_string(r.label);
    j["wav_path"] = r.wav_path.lexically_proximate(base).generic_string();
    j["emb_path"] = r.emb_path.lexically_proximate(base).generic_string();
    out += j.dump() + '\n';
  }
  write_file_atomic(path, out);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace physguard
