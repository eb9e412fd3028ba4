#include "fakescope/audit/audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <set>
#include <sstream>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/common/rng.hpp"

namespace fakescope::audit {

using nlohmann::json;

namespace {

constexpr std::array<int, 64> kLumaBase = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

// Natural index of the k-th coefficient in zigzag order.
constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

std::string with_id(std::string_view id, const std::string& msg) {
  return id.empty() ? msg : std::string(id) + ": " + msg;
}

// First table with id 0, in natural order.
std::vector<int> read_luma_table(std::string_view b, std::string_view id) {
  auto byte = [&](std::size_t i) { return static_cast<unsigned char>(b[i]); };
  if (b.size() < 4 || byte(0) != 0xFF || byte(1) != 0xD8) throw Error(with_id(id, "not a JPEG stream"));
  std::size_t pos = 2;
  while (pos + 4 <= b.size()) {
    if (byte(pos) != 0xFF) throw Error(with_id(id, "corrupt JPEG marker stream"));
    const unsigned marker = byte(pos + 1);
    if (marker == 0xFF) {
      ++pos;
      continue;
    }
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      pos += 2;
      continue;
    }
    const std::size_t len = (static_cast<std::size_t>(byte(pos + 2)) << 8) | byte(pos + 3);
    if (len < 2 || pos + 2 + len > b.size()) throw Error(with_id(id, "truncated JPEG segment"));
    if (marker == 0xDA || marker == 0xD9) break;
    if (marker == 0xDB) {
      std::size_t p = pos + 4;
      const std::size_t end = pos + 2 + len;
      while (p < end) {
        const unsigned pq = byte(p) >> 4, tq = byte(p) & 0x0F;
        ++p;
        const std::size_t need = pq ? 128 : 64;
        if (p + need > end) throw Error(with_id(id, "truncated quantization table"));
        if (tq == 0) {
          std::vector<int> natural(64);
          for (int k = 0; k < 64; ++k) {
            const int v = pq ? (byte(p + 2 * k) << 8) | byte(p + 2 * k + 1) : byte(p + k);
            natural[kZigzag[k]] = v;
          }
          return natural;
        }
        p += need;
      }
    }
    pos += 2 + len;
  }
  throw Error(with_id(id, "JPEG has no luminance quantization table"));
}

double qf_ordinal(const QfEstimate& q) { return q ? *q : 101.0; }

double container_ordinal(const std::string& c) {
  if (c == "jpeg") return 0.0;
  if (c == "png") return 1.0;
  return 2.0;
}

}  // namespace

std::vector<int> scaled_luma_table(int qf) {
  if (qf < 1 || qf > 100) throw Error("qf out of range");
  const long scale = qf < 50 ? 5000 / qf : 200 - 2L * qf;
  std::vector<int> out(64);
  for (int i = 0; i < 64; ++i) {
    const long v = (kLumaBase[i] * scale + 50) / 100;
    out[i] = static_cast<int>(std::clamp(v, 1L, 255L));
  }
  return out;
}

QfEstimate estimate_jpeg_qf(std::string_view bytes, std::string_view id) {
  if (bytes.empty()) throw Error(with_id(id, "empty file"));
  const Container c = sniff_container(bytes);
  if (c != Container::kJpeg) {
    if (c == Container::kPng && bytes.size() < 33) throw Error(with_id(id, "truncated PNG"));
    return std::nullopt;
  }
  const std::vector<int> table = read_luma_table(bytes, id);
  int best_qf = 0;
  long best_dist = -1;
  for (int q = 100; q >= 1; --q) {
    const auto ref = scaled_luma_table(q);
    long dist = 0;
    for (int i = 0; i < 64; ++i) dist += std::abs(ref[i] - table[i]);
    if (best_dist < 0 || dist < best_dist) {
      best_dist = dist;
      best_qf = q;
    }
  }
  return best_qf;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("KS distance needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<RecordFormat> measure_formats(const manifest::DatasetManifest& m) {
  std::vector<RecordFormat> out(m.records.size());
  parallel_for(m.records.size(), [&](std::size_t i) {
    const auto& r = m.records[i];
    const std::string bytes = read_file(m.resolve(r));
    RecordFormat f;
    f.container = std::string(to_string(sniff_container(bytes)));
    f.qf = estimate_jpeg_qf(bytes, r.id);
    f.width = r.width;
    f.height = r.height;
    if (f.width <= 0 || f.height <= 0) {
      const cv::Mat img = decode_image(bytes);
      f.width = img.cols;
      f.height = img.rows;
    }
    out[i] = std::move(f);
  });
  return out;
}

BiasReport format_bias_report(const manifest::DatasetManifest& m, const AuditOptions& options) {
  BiasReport rep;
  rep.options = options;
  const auto formats = measure_formats(m);
  std::vector<double> qf[2], res[2], cont[2];
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const int cls = m.records[i].label == manifest::Label::kFake ? 1 : 0;
    ClassStats& st = cls ? rep.fake : rep.real;
    const auto& f = formats[i];
    ++st.count;
    ++st.container[f.container];
    ++st.qf[f.qf ? std::to_string(*f.qf) : "lossless"];
    ++st.resolution[std::to_string(f.width) + "x" + std::to_string(f.height)];
    qf[cls].push_back(qf_ordinal(f.qf));
    res[cls].push_back(std::min(f.width, f.height));
    cont[cls].push_back(container_ordinal(f.container));
  }
  if (rep.real.count == 0 || rep.fake.count == 0) throw Error("format audit needs both classes");

  rep.ks_qf = ks_distance(qf[0], qf[1]);
  rep.ks_resolution = ks_distance(res[0], res[1]);
  rep.ks_container = ks_distance(cont[0], cont[1]);
  std::set<std::string> kinds;
  for (const auto& [k, v] : rep.real.container) kinds.insert(k);
  for (const auto& [k, v] : rep.fake.container) kinds.insert(k);
  for (const auto& k : kinds) {
    const double p0 = rep.real.container.contains(k) ? static_cast<double>(rep.real.container.at(k)) / rep.real.count : 0.0;
    const double p1 = rep.fake.container.contains(k) ? static_cast<double>(rep.fake.container.at(k)) / rep.fake.count : 0.0;
    rep.tv_container += 0.5 * std::abs(p0 - p1);
  }

  rep.flag_qf = rep.ks_qf > options.ks_threshold;
  rep.flag_resolution = rep.ks_resolution > options.ks_threshold;
  rep.flag_container = rep.tv_container > options.container_threshold;
  auto spike = [&](const ClassStats& a, const ClassStats& b, const char* name) {
    for (const auto& [res_key, n] : a.resolution) {
      if (static_cast<double>(n) / a.count > options.spike_threshold && !b.resolution.contains(res_key)) {
        rep.flag_resolution_spike = true;
        rep.spike_detail = std::string(name) + " class concentrated at " + res_key;
      }
    }
  };
  spike(rep.real, rep.fake, "real");
  spike(rep.fake, rep.real, "fake");
  return rep;
}

json BiasReport::to_json() const {
  auto cls = [](const ClassStats& s) {
    return json{{"count", s.count}, {"container", s.container}, {"qf", s.qf}, {"resolution", s.resolution}};
  };
  return json{{"real", cls(real)},
              {"fake", cls(fake)},
              {"ks", {{"container", ks_container}, {"qf", ks_qf}, {"resolution", ks_resolution}}},
              {"tv_container", tv_container},
              {"flags",
               {{"container", flag_container},
                {"qf", flag_qf},
                {"resolution", flag_resolution},
                {"resolution_spike", flag_resolution_spike}}},
              {"spike_detail", spike_detail},
              {"thresholds",
               {{"ks", options.ks_threshold},
                {"container", options.container_threshold},
                {"spike", options.spike_threshold}}}};
}

std::string BiasReport::to_text() const {
  std::ostringstream out;
  auto hist = [&](const char* title, const std::map<std::string, long>& r, const std::map<std::string, long>& f) {
    out << title << "\n";
    std::set<std::string> keys;
    for (const auto& [k, v] : r) keys.insert(k);
    for (const auto& [k, v] : f) keys.insert(k);
    for (const auto& k : keys) {
      out << "  " << k << std::string(k.size() < 14 ? 14 - k.size() : 1, ' ')
          << "real " << (r.contains(k) ? r.at(k) : 0) << "  fake " << (f.contains(k) ? f.at(k) : 0) << "\n";
    }
  };
  out << "records: real " << real.count << ", fake " << fake.count << "\n";
  hist("container", real.container, fake.container);
  hist("jpeg quality", real.qf, fake.qf);
  hist("resolution", real.resolution, fake.resolution);
  auto flag = [](bool b) { return b ? "FLAG" : "ok"; };
  char buf[256];
  std::snprintf(buf, sizeof buf, "KS container %.4f (TV %.4f)  %s\nKS quality   %.4f  %s\nKS min-side  %.4f  %s\n",
                ks_container, tv_container, flag(flag_container), ks_qf, flag(flag_qf), ks_resolution,
                flag(flag_resolution));
  out << buf;
  out << "resolution spike: " << (flag_resolution_spike ? "FLAG (" + spike_detail + ")" : "ok") << "\n";
  return out.str();
}

manifest::DatasetManifest rebalance_compression(const manifest::DatasetManifest& m,
                                                const std::filesystem::path& output_dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  const auto formats = measure_formats(m);
  std::vector<int> target;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (m.records[i].label == manifest::Label::kReal && formats[i].qf) target.push_back(*formats[i].qf);
  }
  if (target.empty()) throw Error("no target distribution: every real image is lossless");

  manifest::DatasetManifest out = m;
  out.root = output_dir;
  const fs::path abs_root = fs::absolute(output_dir);
  std::vector<std::size_t> fakes;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    if (r.label == manifest::Label::kFake) {
      fakes.push_back(i);
    } else {
      r.path = fs::relative(fs::absolute(m.resolve(m.records[i])), abs_root).generic_string();
    }
  }
  parallel_for(fakes.size(), [&](std::size_t k) {
    const std::size_t i = fakes[k];
    auto& r = out.records[i];
    Rng rng(seed, r.id, "rebalance_qf");
    const int qf = target[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(target.size()) - 1))];
    std::string name = r.id;
    for (char& c : name) {
      if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    const std::string rel = "fakes/" + name + ".jpg";
    write_file(output_dir / rel, encode_jpeg(load_image(m.resolve(m.records[i])), qf));
    r.path = rel;
    r.container = Container::kJpeg;
    r.jpeg_qf = qf;
  });
  return out;
}

}  // namespace fakescope::audit
