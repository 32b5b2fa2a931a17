#include "afford/dataspec.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "afford/error.hpp"

namespace afford::data {

using nlohmann::json;

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    require(pos + n <= buf.size(), std::string("truncated file while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    const std::uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

void dump(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "write failed: " + path);
}

json channel_to_json(const ChannelSpec& c) {
  json j{{"name", c.name}, {"kind", kind_name(c.kind)}, {"dim", c.dim},
         {"length", c.length}, {"units", c.units}};
  if (!c.agent.empty()) j["agent"] = c.agent;
  if (c.kind == ChannelKind::Image) {
    j["height"] = c.height;
    j["width"] = c.width;
  }
  return j;
}

ChannelSpec channel_from_json(const json& j) {
  ChannelSpec c;
  c.name = j.at("name").get<std::string>();
  c.kind = kind_from_name(j.at("kind").get<std::string>());
  c.dim = j.at("dim").get<std::size_t>();
  c.length = j.at("length").get<std::size_t>();
  c.units = j.at("units").get<std::string>();
  if (j.contains("agent")) c.agent = j.at("agent").get<std::string>();
  if (c.kind == ChannelKind::Image) {
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
  }
  c.validate();
  return c;
}

json meta_to_json(const SampleMeta& m) {
  return json{{"label", m.label},         {"object_param", m.object_param},
              {"outcome", m.outcome},     {"split", m.split},
              {"direction", m.direction}, {"variant", m.variant}};
}

SampleMeta meta_from_json(const json& j) {
  SampleMeta m;
  m.label = j.at("label").get<std::string>();
  m.object_param = j.at("object_param").get<double>();
  m.outcome = j.at("outcome").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.direction = j.at("direction").get<std::string>();
  m.variant = j.at("variant").get<std::string>();
  return m;
}

std::vector<std::size_t> channel_payload_shape(const ChannelSpec& c) {
  if (c.kind == ChannelKind::Image) return {c.height, c.width};
  return {c.length, c.dim};
}

}  // namespace

std::string channels_to_json_string(const std::vector<ChannelSpec>& channels) {
  json arr = json::array();
  for (const auto& c : channels) arr.push_back(channel_to_json(c));
  return arr.dump();
}

std::vector<ChannelSpec> channels_from_json_string(const std::string& text) {
  std::vector<ChannelSpec> out;
  for (const auto& jc : json::parse(text)) out.push_back(channel_from_json(jc));
  return out;
}

std::string kind_name(ChannelKind k) {
  return k == ChannelKind::Image ? "image" : "trajectory";
}

ChannelKind kind_from_name(const std::string& s) {
  if (s == "image") return ChannelKind::Image;
  if (s == "trajectory") return ChannelKind::Trajectory;
  throw Error("unknown channel kind: " + s);
}

void ChannelSpec::validate() const {
  require(!name.empty(), "channel spec: empty name");
  if (kind == ChannelKind::Trajectory) {
    require(length >= 2, "channel " + name + ": trajectory length must be >= 2");
    require(dim >= 1, "channel " + name + ": dim must be >= 1");
  } else {
    require(length == 1, "channel " + name + ": image channels have length 1");
    require(height >= 1 && width >= 1, "channel " + name + ": bad image extents");
    require(dim == height * width, "channel " + name + ": image dim != height*width");
    require(agent.empty(), "channel " + name + ": image channels have no agent");
  }
}

std::size_t Dataset::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name == name) return i;
  throw Error("unknown channel: " + name);
}

const ChannelSpec* Dataset::find_channel(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return &c;
  return nullptr;
}

void Dataset::validate() const {
  std::set<std::string> names;
  for (const auto& c : channels) {
    c.validate();
    require(names.insert(c.name).second, "duplicate channel name: " + c.name);
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& sm = samples[s];
    require(sm.payload.size() == channels.size() && sm.mask.size() == channels.size(),
            "sample " + std::to_string(s) + ": channel count mismatch");
    bool any = false;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (!sm.mask[c]) {
        require(sm.payload[c].data.empty(), "sample " + std::to_string(s) +
                                                ": masked channel has payload");
        continue;
      }
      any = true;
      require(sm.payload[c].shape == channel_payload_shape(channels[c]),
              "sample " + std::to_string(s) + ": payload shape mismatch on " + channels[c].name);
    }
    require(any, "sample " + std::to_string(s) + ": no channel available");
  }
}

std::vector<std::size_t> Dataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].meta.split == split) out.push_back(i);
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.channels = channels;
  out.scenario = scenario;
  out.generator_config = generator_config;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < samples.size(), "dataset subset: index out of range");
    out.samples.push_back(samples[i]);
  }
  return out;
}

std::vector<std::string> Dataset::labels() const {
  std::vector<std::string> out;
  for (const auto& s : samples) {
    bool seen = false;
    for (const auto& l : out)
      if (l == s.meta.label) { seen = true; break; }
    if (!seen) out.push_back(s.meta.label);
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  json meta;
  meta["channels"] = json::array();
  for (const auto& c : ds.channels) meta["channels"].push_back(channel_to_json(c));
  meta["sample_count"] = ds.samples.size();
  meta["samples"] = json::array();
  for (const auto& s : ds.samples) meta["samples"].push_back(meta_to_json(s.meta));
  meta["scenario"] = ds.scenario;
  meta["generator"] = ds.generator_config.empty() ? json::object()
                                                  : json::parse(ds.generator_config);

  std::string out;
  out += "AFFD";
  put_u32(out, kFormatVersion);
  const std::string meta_str = meta.dump();
  put_u64(out, meta_str.size());
  out += meta_str;
  for (const auto& s : ds.samples) {
    for (std::size_t c = 0; c < ds.channels.size(); ++c) {
      out.push_back(static_cast<char>(s.mask[c] ? 1 : 0));
      if (!s.mask[c]) continue;
      for (double v : s.payload[c].data) put_f64(out, v);
    }
  }
  dump(path, out);
}

Dataset read_dataset(const std::string& path) {
  const std::string buf = slurp(path);
  Reader r{buf};
  require(r.bytes(4, "magic") == "AFFD", "bad magic (expected AFFD): " + path);
  const std::uint32_t version = r.u32("version");
  require(version == kFormatVersion,
          "unsupported dataset format version " + std::to_string(version));
  const std::uint64_t meta_len = r.u64("metadata length");
  const json meta = json::parse(r.bytes(meta_len, "metadata"));

  Dataset ds;
  for (const auto& jc : meta.at("channels")) ds.channels.push_back(channel_from_json(jc));
  ds.scenario = meta.value("scenario", "");
  ds.generator_config = meta.contains("generator") ? meta.at("generator").dump() : "";
  const std::size_t count = meta.at("sample_count").get<std::size_t>();
  const auto& sample_meta = meta.at("samples");
  require(sample_meta.size() == count, "sample metadata count mismatch");

  ds.samples.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    auto& sm = ds.samples[s];
    sm.meta = meta_from_json(sample_meta[s]);
    sm.mask.resize(ds.channels.size());
    sm.payload.resize(ds.channels.size());
    for (std::size_t c = 0; c < ds.channels.size(); ++c) {
      const std::string flag = r.bytes(1, "availability mask");
      require(flag[0] == 0 || flag[0] == 1, "corrupt availability byte");
      sm.mask[c] = static_cast<std::uint8_t>(flag[0]);
      if (!sm.mask[c]) continue;
      const auto shape = channel_payload_shape(ds.channels[c]);
      num::Tensor t(shape);
      for (auto& v : t.data) v = r.f64("payload");
      sm.payload[c] = std::move(t);
    }
  }
  require(r.pos == buf.size(), "trailing bytes after payload: " + path);
  ds.validate();
  return ds;
}

void write_array_file(const ArrayFile& f, const std::string& path) {
  require(f.magic.size() == 4, "array file: magic must be 4 bytes");
  json meta = json::parse(f.meta_json);
  meta["arrays"] = json::array();
  for (const auto& [name, t] : f.arrays)
    meta["arrays"].push_back(json{{"name", name}, {"shape", t.shape}});

  std::string out;
  out += f.magic;
  put_u32(out, kFormatVersion);
  const std::string meta_str = meta.dump();
  put_u64(out, meta_str.size());
  out += meta_str;
  for (const auto& [name, t] : f.arrays)
    for (double v : t.data) put_f64(out, v);
  dump(path, out);
}

ArrayFile read_array_file(const std::string& path, const std::string& expect_magic) {
  const std::string buf = slurp(path);
  Reader r{buf};
  const std::string magic = r.bytes(4, "magic");
  require(magic == expect_magic,
          "bad magic in " + path + " (expected " + expect_magic + ", got " + magic + ")");
  const std::uint32_t version = r.u32("version");
  require(version == kFormatVersion,
          "unsupported model format version " + std::to_string(version));
  const std::uint64_t meta_len = r.u64("metadata length");
  ArrayFile f;
  f.magic = magic;
  const json meta = json::parse(r.bytes(meta_len, "metadata"));
  for (const auto& ja : meta.at("arrays")) {
    const std::string name = ja.at("name").get<std::string>();
    const std::vector<std::size_t> shape = ja.at("shape").get<std::vector<std::size_t>>();
    num::Tensor t(shape);
    for (auto& v : t.data) v = r.f64(name.c_str());
    f.arrays.emplace_back(name, std::move(t));
  }
  require(r.pos == buf.size(), "trailing bytes after arrays: " + path);
  json meta_copy = meta;
  meta_copy.erase("arrays");
  f.meta_json = meta_copy.dump();
  return f;
}

num::Tensor resample_trajectory(const num::Tensor& values, std::size_t target_len) {
  require(values.ndim() == 2, "resample: need [T,dim] input");
  const std::size_t src_len = values.rows();
  const std::size_t dim = values.cols();
  require(src_len >= 2, "resample: need at least 2 source rows");
  require(target_len >= 2, "resample: need at least 2 target rows");
  num::Tensor out({target_len, dim});
  for (std::size_t i = 0; i < target_len; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(target_len - 1);
    if (i == 0 || i == target_len - 1) {
      const std::size_t src = (i == 0) ? 0 : src_len - 1;
      for (std::size_t d = 0; d < dim; ++d) out.at(i, d) = values.at(src, d);
      continue;
    }
    const double x = t * static_cast<double>(src_len - 1);
    std::size_t lo = static_cast<std::size_t>(x);
    if (lo >= src_len - 1) lo = src_len - 2;
    const double frac = x - static_cast<double>(lo);
    for (std::size_t d = 0; d < dim; ++d)
      out.at(i, d) = values.at(lo, d) + frac * (values.at(lo + 1, d) - values.at(lo, d));
  }
  return out;
}

std::vector<double> time_grid(std::size_t n) {
  require(n >= 2, "time grid needs at least 2 points");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

std::string GenerationRequest::to_json() const {
  json j;
  j["version"] = 1;
  j["observed"] = json::array();
  for (const auto& oc : observed) {
    json jo{{"channel", oc.name}};
    if (!oc.image.data.empty()) {
      jo["image"] = oc.image.data;
      jo["height"] = oc.image.shape[0];
      jo["width"] = oc.image.shape[1];
    } else {
      jo["points"] = json::array();
      for (const auto& p : oc.points) jo["points"].push_back(json{{"t", p.t}, {"value", p.value}});
    }
    j["observed"].push_back(jo);
  }
  j["outputs"] = outputs;
  if (!times.empty()) j["times"] = times;
  return j.dump(2);
}

GenerationRequest GenerationRequest::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("request: invalid JSON: ") + e.what());
  }
  require(j.value("version", 0) == 1, "request: unsupported version");
  GenerationRequest req;
  for (const auto& jo : j.at("observed")) {
    ObservedChannel oc;
    oc.name = jo.at("channel").get<std::string>();
    if (jo.contains("image")) {
      const std::size_t h = jo.at("height").get<std::size_t>();
      const std::size_t w = jo.at("width").get<std::size_t>();
      oc.image = num::Tensor({h, w}, jo.at("image").get<std::vector<double>>());
    } else {
      for (const auto& jp : jo.at("points")) {
        ConditionPoint p;
        p.t = jp.at("t").get<double>();
        p.value = jp.at("value").get<std::vector<double>>();
        oc.points.push_back(std::move(p));
      }
    }
    req.observed.push_back(std::move(oc));
  }
  req.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (j.contains("times")) req.times = j.at("times").get<std::vector<double>>();
  return req;
}

}  // namespace afford::data
