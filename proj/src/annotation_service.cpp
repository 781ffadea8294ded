#include "leakaudit/annotation_service.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <numeric>
#include <system_error>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "leakaudit/error.hpp"
#include "leakaudit/text_io.hpp"

namespace leakaudit {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string errno_text() { return std::generic_category().message(errno); }

void write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_io(fmt::format("{}: write failed: {}", path.string(), errno_text()));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

VerdictLogContents parse_log(std::string_view text) {
  VerdictLogContents out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      // a crash mid-append leaves an unterminated tail
      out.discarded_partial = 1;
      break;
    }
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (auto rec = parse_annotation(line)) {
      out.records.push_back(std::move(*rec));
    } else {
      ++out.discarded_malformed;
    }
  }
  return out;
}

}  // namespace

VerdictLogContents read_verdict_log(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return {};
  return parse_log(read_file(path));
}

VerdictLog::VerdictLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path_.parent_path(), ec);
  }
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw_io(fmt::format("{}: cannot open verdict file: {}", path_.string(), errno_text()));

  const std::string text = read_file(path_);
  recovered_ = parse_log(text);
  if (recovered_.discarded_partial != 0) {
    // drop the torn tail so the next append starts on a fresh line
    const auto keep = static_cast<off_t>(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
    if (::ftruncate(fd_, keep) != 0 || ::fsync(fd_) != 0) {
      const std::string why = errno_text();
      ::close(fd_);
      throw_io(fmt::format("{}: cannot drop partial record: {}", path_.string(), why));
    }
  }
}

VerdictLog::~VerdictLog() {
  if (fd_ >= 0) ::close(fd_);
}

void VerdictLog::append(const AnnotationRecord& record) {
  std::string line = format_annotation(record);
  line.push_back('\n');
  write_all(fd_, line, path_);
  if (::fsync(fd_) != 0) throw_io(fmt::format("{}: fsync failed: {}", path_.string(), errno_text()));
}

AnnotationSession::AnnotationSession(std::vector<MatchResult> matches, const fs::path& verdict_file,
                                     SessionConfig config)
    : matches_(std::move(matches)), config_(std::move(config)), log_(verdict_file) {
  config_.policy.validate();
  order_.resize(matches_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return matches_[a].similarity > matches_[b].similarity;
  });
  by_pair_.reserve(matches_.size());
  for (std::size_t i = 0; i < matches_.size(); ++i) {
    const auto id = make_pair_id(matches_[i].probe_id, matches_[i].gallery_id);
    if (!by_pair_.emplace(id, i).second) throw_data(fmt::format("match file lists pair {} twice", id));
  }
  // records naming pairs outside this match file stay in the log untouched
  for (const auto& rec : log_.recovered().records) {
    if (by_pair_.contains(rec.pair_id) && parse_utc_timestamp(rec.timestamp)) apply(rec);
  }
}

void AnnotationSession::apply(const AnnotationRecord& record) {
  const std::int64_t micros = *parse_utc_timestamp(record.timestamp);
  auto [it, inserted] = state_.try_emplace(record.pair_id, Effective{micros, record});
  // later file position wins ties
  if (!inserted && micros >= it->second.micros) it->second = Effective{micros, record};
}

namespace {

std::string url_component(std::string_view s) {
  std::string out;
  for (const unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

}  // namespace

PairDescriptor AnnotationSession::describe(std::size_t index) const {
  const MatchResult& m = matches_[index];
  PairDescriptor d;
  d.pair_id = make_pair_id(m.probe_id, m.gallery_id);
  d.probe_id = m.probe_id;
  d.gallery_id = m.gallery_id;
  d.gallery_label = m.gallery_label;
  d.rank = m.rank;
  d.similarity = m.similarity;
  d.probe_image = "/images/" + url_component(config_.probe_dataset) + "/" + url_component(m.probe_id);
  d.gallery_image = "/images/" + url_component(config_.gallery_dataset) + "/" + url_component(m.gallery_id);
  d.review_band = config_.policy.in_review_band(m.similarity);
  d.high_similarity = m.similarity > config_.policy.review_high;
  d.low_similarity = m.similarity < config_.policy.review_low;
  if (auto it = state_.find(d.pair_id); it != state_.end()) d.current = it->second.record;
  return d;
}

std::vector<PairDescriptor> AnnotationSession::queue(const QueueFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<PairDescriptor> out;
  for (const std::size_t i : order_) {
    const MatchResult& m = matches_[i];
    if (!filter.in_band(m.similarity)) continue;
    if (filter.unannotated_only && state_.contains(make_pair_id(m.probe_id, m.gallery_id))) continue;
    out.push_back(describe(i));
  }
  return out;
}

std::optional<PairDescriptor> AnnotationSession::next_pair(const QueueFilter& filter) const {
  std::shared_lock lock(mutex_);
  for (const std::size_t i : order_) {
    const MatchResult& m = matches_[i];
    if (!filter.in_band(m.similarity)) continue;
    if (filter.unannotated_only && state_.contains(make_pair_id(m.probe_id, m.gallery_id))) continue;
    return describe(i);
  }
  return std::nullopt;
}

Ack AnnotationSession::record_verdict(const AnnotationRecord& record) {
  if (!by_pair_.contains(record.pair_id)) {
    return {AckStatus::unknown_pair, fmt::format("unknown pair_id {}", record.pair_id)};
  }
  if (auto why = record.rule_violation()) return {AckStatus::rule_violation, *why};
  std::unique_lock lock(mutex_);
  log_.append(record);
  apply(record);
  return {AckStatus::recorded, {}};
}

Progress AnnotationSession::progress(const QueueFilter& filter) const {
  std::shared_lock lock(mutex_);
  Progress p;
  for (const Verdict v : {Verdict::same, Verdict::different, Verdict::unsure}) {
    p.per_verdict[std::string(verdict_name(v))] = 0;
  }
  for (const MatchResult& m : matches_) {
    if (!filter.in_band(m.similarity)) continue;
    ++p.total;
    if (auto it = state_.find(make_pair_id(m.probe_id, m.gallery_id)); it != state_.end()) {
      ++p.annotated;
      ++p.per_verdict[std::string(verdict_name(it->second.record.verdict))];
    }
  }
  return p;
}

std::optional<AnnotationRecord> AnnotationSession::effective(const std::string& pair_id) const {
  std::shared_lock lock(mutex_);
  if (auto it = state_.find(pair_id); it != state_.end()) return it->second.record;
  return std::nullopt;
}

std::unique_ptr<AnnotationSession> open_session(const fs::path& match_file, const fs::path& verdict_file,
                                                SessionConfig config) {
  return std::make_unique<AnnotationSession>(load_matches(match_file), verdict_file, std::move(config));
}

namespace {

ordered_json record_json(const AnnotationRecord& r) {
  ordered_json j;
  j["pair_id"] = r.pair_id;
  j["verdict"] = std::string(verdict_name(r.verdict));
  j["duplicate"] = r.duplicate;
  j["annotator"] = r.annotator;
  j["timestamp"] = r.timestamp;
  return j;
}

}  // namespace

std::string descriptor_json(const PairDescriptor& d) {
  ordered_json j;
  j["pair_id"] = d.pair_id;
  j["probe_id"] = d.probe_id;
  j["gallery_id"] = d.gallery_id;
  j["gallery_label"] = d.gallery_label;
  j["rank"] = d.rank;
  j["similarity"] = d.similarity;
  j["probe_image"] = d.probe_image;
  j["gallery_image"] = d.gallery_image;
  j["review_band"] = d.review_band;
  j["high_similarity"] = d.high_similarity;
  j["low_similarity"] = d.low_similarity;
  j["current"] = d.current ? record_json(*d.current) : ordered_json(nullptr);
  return j.dump();
}

std::string progress_json(const Progress& p) {
  ordered_json j;
  j["annotated"] = p.annotated;
  j["total"] = p.total;
  ordered_json per = ordered_json::object();
  for (const auto& [k, v] : p.per_verdict) per[k] = v;
  j["per_verdict"] = per;
  return j.dump();
}

struct AnnotationServer::Impl {
  AnnotationSession& session;
  ServerConfig config;
  httplib::Server server;

  Impl(AnnotationSession& s, ServerConfig c) : session(s), config(std::move(c)) { routes(); }

  static void error(httplib::Response& res, int status, std::string_view message) {
    res.status = status;
    ordered_json j;
    j["error"] = std::string(message);
    res.set_content(j.dump(), "application/json");
  }

  // band=LO,HI and unannotated=true|false; returns nullopt after writing a 400
  std::optional<QueueFilter> filter_from(const httplib::Request& req, httplib::Response& res,
                                         bool default_unannotated) const {
    QueueFilter f = session.config().default_filter;
    f.unannotated_only = default_unannotated;
    if (req.has_param("band")) {
      const std::string band = req.get_param_value("band");
      const auto comma = band.find(',');
      std::optional<double> lo, hi;
      if (comma != std::string::npos) {
        try {
          lo = parse_double(std::string_view(band).substr(0, comma), "band low");
          hi = parse_double(std::string_view(band).substr(comma + 1), "band high");
        } catch (const Error&) {
          lo.reset();
        }
      }
      if (!lo || !hi || *lo > *hi) {
        error(res, 400, fmt::format("band must be LO,HI with LO <= HI, got '{}'", band));
        return std::nullopt;
      }
      f.band_low = *lo;
      f.band_high = *hi;
    }
    if (req.has_param("unannotated")) {
      const std::string v = req.get_param_value("unannotated");
      if (v == "true" || v == "1") {
        f.unannotated_only = true;
      } else if (v == "false" || v == "0") {
        f.unannotated_only = false;
      } else {
        error(res, 400, "unannotated must be true or false");
        return std::nullopt;
      }
    }
    return f;
  }

  void routes() {
    server.Get("/api/queue/next", [this](const httplib::Request& req, httplib::Response& res) {
      auto f = filter_from(req, res, session.config().default_filter.unannotated_only);
      if (!f) return;
      if (auto d = session.next_pair(*f)) {
        res.status = 200;
        res.set_content(descriptor_json(*d), "application/json");
      } else {
        res.status = 204;
      }
    });

    server.Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
      auto f = filter_from(req, res, false);
      if (!f) return;
      res.set_content(progress_json(session.progress(*f)), "application/json");
    });

    server.Post("/api/verdict", [this](const httplib::Request& req, httplib::Response& res) {
      AnnotationRecord rec;
      try {
        const auto j = nlohmann::json::parse(req.body);
        rec.pair_id = j.at("pair_id").get<std::string>();
        const auto v = parse_verdict(j.at("verdict").get<std::string>());
        if (!v) return error(res, 400, "verdict must be same, different or unsure");
        rec.verdict = *v;
        rec.duplicate = j.contains("duplicate") ? j.at("duplicate").get<bool>() : false;
        rec.annotator = j.contains("annotator") ? j.at("annotator").get<std::string>() : std::string("anonymous");
        rec.timestamp = j.contains("timestamp") && !j.at("timestamp").is_null()
                            ? j.at("timestamp").get<std::string>()
                            : current_utc_timestamp();
      } catch (const nlohmann::json::exception& e) {
        return error(res, 400, fmt::format("malformed verdict body: {}", e.what()));
      }
      try {
        const Ack ack = session.record_verdict(rec);
        switch (ack.status) {
          case AckStatus::recorded:
            res.status = 201;
            res.set_content(record_json(rec).dump(), "application/json");
            return;
          case AckStatus::unknown_pair:
            return error(res, 404, ack.message);
          case AckStatus::rule_violation:
            return error(res, 409, ack.message);
        }
      } catch (const Error& e) {
        return error(res, 500, e.what());
      }
    });

    server.Get(R"(/images/([^/]+)/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string dataset = req.matches[1];
      const std::string image_id = req.matches[2];
      const auto root_it = config.image_roots.find(dataset);
      if (root_it == config.image_roots.end()) return error(res, 404, "unknown dataset");
      const fs::path rel(image_id);
      if (rel.is_absolute()) return error(res, 400, "image id must be relative");
      for (const auto& part : rel) {
        if (part == "..") return error(res, 400, "image id must stay inside the image root");
      }
      std::error_code ec;
      const fs::path root = fs::weakly_canonical(root_it->second, ec);
      const fs::path full = fs::weakly_canonical(root / rel, ec);
      const auto mismatch = std::mismatch(root.begin(), root.end(), full.begin(), full.end());
      if (ec || mismatch.first != root.end() || !fs::is_regular_file(full, ec)) {
        return error(res, 404, "image not found");
      }
      std::string ext = full.extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      const char* type = ext == ".png" ? "image/png" : (ext == ".jpg" || ext == ".jpeg") ? "image/jpeg" : "application/octet-stream";
      try {
        res.set_content(read_file(full), type);
      } catch (const Error&) {
        error(res, 404, "image not readable");
      }
    });
  }
};

AnnotationServer::AnnotationServer(AnnotationSession& session, ServerConfig config)
    : impl_(std::make_unique<Impl>(session, std::move(config))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool AnnotationServer::serve() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace leakaudit
