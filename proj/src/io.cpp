#include "prx/io.hpp"

#include <fftw3.h>

#include <cstdio>
#include <fstream>

namespace prx {

namespace {

void write_doubles(const std::filesystem::path& path, const double* data,
                   std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pipeline_error("io: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw pipeline_error("io: write failed for " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path,
                                 std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pipeline_error("io: cannot open " + path.string());
  std::vector<double> data(expected);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(expected * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != expected * sizeof(double)) {
    throw pipeline_error("io: short read for " + path.string());
  }
  return data;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw pipeline_error("io: cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pipeline_error("io: cannot open " + path.string());
  out << text;
  if (!out) throw pipeline_error("io: write failed for " + path.string());
}

}  // namespace

void save_frame(const std::filesystem::path& stem, const ComplexFrame& frame,
                const std::string& label) {
  if (frame.samples.empty()) throw config_error("save_frame: empty frame");
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  static_assert(sizeof(cplx) == 2 * sizeof(double));
  write_doubles(bin, reinterpret_cast<const double*>(frame.samples.data()),
                2 * frame.samples.size());
  json j;
  j["format"] = "complex_float64_interleaved_le";
  j["label"] = label;
  j["length"] = frame.samples.size();
  j["sample_rate_hz"] = frame.sample_rate_hz;
  write_text(side, canonical_dump(j) + "\n");
}

ComplexFrame load_frame(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  const json j = read_json(side);
  if (j.at("format").get<std::string>() != "complex_float64_interleaved_le") {
    throw pipeline_error("load_frame: unknown format in " + side.string());
  }
  const std::size_t n = j.at("length").get<std::size_t>();
  const std::vector<double> raw = read_doubles(bin, 2 * n);
  ComplexFrame frame;
  frame.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  frame.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    frame.samples[i] = cplx(raw[2 * i], raw[2 * i + 1]);
  }
  return frame;
}

void save_quad(const std::filesystem::path& stem, const IntensityQuad& quad) {
  const std::size_t n = quad.a_x.size();
  if (n == 0 || quad.b_x.size() != n || quad.a_y.size() != n ||
      quad.b_y.size() != n) {
    throw config_error("save_quad: channels must share a non-zero length");
  }
  std::vector<double> inter(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    inter[4 * i + 0] = quad.a_x[i];
    inter[4 * i + 1] = quad.b_x[i];
    inter[4 * i + 2] = quad.a_y[i];
    inter[4 * i + 3] = quad.b_y[i];
  }
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  write_doubles(bin, inter.data(), inter.size());
  json j;
  j["format"] = "float64_le";
  j["layout"] = "sample_interleaved";
  j["channels"] = json::array({"a_x", "b_x", "a_y", "b_y"});
  j["length"] = n;
  j["sample_rate_hz"] = quad.sample_rate_hz;
  j["aliased_energy_fraction"] = quad.aliased_energy_fraction;
  write_text(side, canonical_dump(j) + "\n");
}

IntensityQuad load_quad(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  const json j = read_json(side);
  if (j.at("layout").get<std::string>() != "sample_interleaved") {
    throw pipeline_error("load_quad: unknown layout in " + side.string());
  }
  const std::size_t n = j.at("length").get<std::size_t>();
  const std::vector<double> raw = read_doubles(bin, 4 * n);
  IntensityQuad quad;
  quad.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  if (j.contains("aliased_energy_fraction")) {
    const auto a = j.at("aliased_energy_fraction");
    for (std::size_t c = 0; c < 4 && c < a.size(); ++c) {
      quad.aliased_energy_fraction[c] = a[c].get<double>();
    }
  }
  quad.a_x.resize(n);
  quad.b_x.resize(n);
  quad.a_y.resize(n);
  quad.b_y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    quad.a_x[i] = raw[4 * i + 0];
    quad.b_x[i] = raw[4 * i + 1];
    quad.a_y[i] = raw[4 * i + 2];
    quad.b_y[i] = raw[4 * i + 3];
  }
  return quad;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<rvec>& rows) {
  if (header.empty()) throw config_error("write_csv: empty header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pipeline_error("io: cannot open " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << header[c] << (c + 1 < header.size() ? "," : "\n");
  }
  for (const rvec& row : rows) {
    if (row.size() != header.size()) {
      throw config_error("write_csv: row arity does not match the header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << (c + 1 < row.size() ? "," : "\n");
    }
  }
  if (!out) throw pipeline_error("io: write failed for " + path.string());
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string canonical_dump(const json& j) {
  // nlohmann::json objects iterate in key order, so dump() is canonical.
  return j.dump(2);
}

std::uint64_t config_fingerprint(const json& config) {
  return fnv1a64(canonical_dump(config));
}

void write_manifest(const std::filesystem::path& path, const json& config,
                    const json& results) {
  json m;
  m["config"] = config;
  char fp[32];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(config_fingerprint(config)));
  m["config_fingerprint"] = std::string(fp);
  m["build"] = {
      {"fftw", std::string(fftw_version)},
      {"compiler", std::string(
#if defined(__clang__)
           "clang " __clang_version__
#elif defined(__GNUC__)
           "gcc " __VERSION__
#else
           "unknown"
#endif
           )},
  };
  m["results"] = results;
  write_text(path, canonical_dump(m) + "\n");
}

}  // namespace prx
