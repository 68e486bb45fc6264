#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rangehall/analytics/feedback.hpp"
#include "rangehall/analytics/trouble.hpp"
#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/projection.hpp"
#include "rangehall/scoring.hpp"

namespace rangehall {

inline int http_status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError:
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::RoleForbidden:
    case ErrorCode::NotAParticipant: return 403;
    case ErrorCode::UnknownRun: return 404;
    case ErrorCode::RunClosed:
    case ErrorCode::RunStillOpen: return 409;
    case ErrorCode::Io: return 500;
    default: return 422;
  }
}

inline Json error_body(const Error& e) {
  Json body{{"error", error_code_name(e.code())}, {"message", e.what()}};
  if (const auto* s = dynamic_cast<const SyntaxError*>(&e)) {
    body["line"] = s->line();
    body["column"] = s->column();
  }
  if (const auto* r = dynamic_cast<const ReferenceError*>(&e)) {
    Json dangling = Json::array();
    for (const auto& d : r->dangling()) dangling.push_back({{"id", d.id}, {"location", d.location}, {"target", d.target}});
    body["dangling"] = dangling;
  }
  return body;
}

inline std::string random_token() {
  static std::mutex m;
  static std::random_device rd;
  std::lock_guard lock(m);
  std::ostringstream ss;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    ss << buf;
  }
  return ss.str();
}

/// Who a bearer token belongs to. The ingest token acts for the range
/// itself: it may post any actor's events and read every channel.
struct Caller {
  bool ingest = false;
  std::string actor_id;
};

struct StreamSubscriber {
  Caller caller;
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool closed = false;

  void push(std::string msg) {
    {
      std::lock_guard lock(m);
      queue.push_back(std::move(msg));
    }
    cv.notify_all();
  }
  void close() {
    {
      std::lock_guard lock(m);
      closed = true;
    }
    cv.notify_all();
  }
};

inline std::string sse_message(std::string_view event, const Json& data) {
  return "event: " + std::string(event) + "\ndata: " + compact_dump(data) + "\n\n";
}

/// One hosted run: its definition, log, credentials and live subscribers.
class HostedRun {
 public:
  HostedRun(std::shared_ptr<const TrainingDefinition> def, std::unique_ptr<RunLog> log, std::map<std::string, std::string> tokens,
            std::string ingest_token)
      : def_(std::move(def)), log_(std::move(log)), tokens_(std::move(tokens)), ingest_token_(std::move(ingest_token)) {}

  const TrainingDefinition& definition() const { return *def_; }
  RunLog& log() { return *log_; }
  const std::map<std::string, std::string>& tokens() const { return tokens_; }
  const std::string& ingest_token() const { return ingest_token_; }

  Caller authenticate(const std::string& token) const {
    if (!token.empty() && token == ingest_token_) return {true, ""};
    for (const auto& [actor, t] : tokens_)
      if (!token.empty() && t == token) return {false, actor};
    throw Error(ErrorCode::Unauthorized, "missing or invalid bearer token");
  }

  /// Appends and fans refresh notices out to subscribers of changed channels.
  std::pair<EventEnvelope, std::vector<Channel>> ingest(const PendingEvent& ev) {
    std::lock_guard lock(write_mutex_);
    const RunSnapshot before = log_->snapshot();
    EventEnvelope env = log_->append(ev);
    auto channels = publish_update(*def_, before, env);
    notify(env.seq, channels);
    return {std::move(env), std::move(channels)};
  }

  void close(Timestamp end) {
    std::lock_guard lock(write_mutex_);
    log_->close(end);
    std::lock_guard sl(subs_mutex_);
    for (const auto& s : subscribers_) {
      s->push(sse_message("closed", {{"run_id", log_->run().run_id}, {"end_time", format_timestamp(end)}}));
      s->close();
    }
  }

  std::shared_ptr<StreamSubscriber> subscribe(Caller caller) {
    auto sub = std::make_shared<StreamSubscriber>();
    sub->caller = std::move(caller);
    std::lock_guard lock(subs_mutex_);
    subscribers_.push_back(sub);
    return sub;
  }

  void unsubscribe(const std::shared_ptr<StreamSubscriber>& sub) {
    std::lock_guard lock(subs_mutex_);
    subscribers_.erase(std::remove(subscribers_.begin(), subscribers_.end(), sub), subscribers_.end());
  }

  void close_streams() {
    std::lock_guard lock(subs_mutex_);
    for (const auto& s : subscribers_) s->close();
  }

  std::size_t subscriber_count() const {
    std::lock_guard lock(subs_mutex_);
    return subscribers_.size();
  }

 private:
  void notify(std::uint64_t seq, const std::vector<Channel>& channels) {
    std::lock_guard lock(subs_mutex_);
    for (const auto& s : subscribers_) {
      std::vector<Channel> mine;
      for (const auto& c : channels)
        if (s->caller.ingest || c.actor_id == s->caller.actor_id) mine.push_back(c);
      if (mine.empty()) continue;
      s->push(sse_message("refresh", {{"run_id", log_->run().run_id}, {"seq", seq}, {"channels", to_json(mine)}}));
    }
  }

  std::shared_ptr<const TrainingDefinition> def_;
  std::unique_ptr<RunLog> log_;
  std::map<std::string, std::string> tokens_;
  std::string ingest_token_;
  std::mutex write_mutex_;
  mutable std::mutex subs_mutex_;
  std::vector<std::shared_ptr<StreamSubscriber>> subscribers_;
};

struct CreatedRun {
  std::string run_id;
  std::string ingest_token;
  std::map<std::string, std::string> tokens;
};

/// Runs hosted under a data directory, one subdirectory per run:
/// definition.json, events.jsonl and tokens.json.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::filesystem::create_directories(dir_ / "runs");
    for (const auto& entry : std::filesystem::directory_iterator(dir_ / "runs")) {
      if (!entry.is_directory()) continue;
      const auto d = entry.path();
      if (!std::filesystem::exists(d / "events.jsonl")) continue;
      auto def = std::make_shared<const TrainingDefinition>(load_definition((d / "definition.json").string()));
      auto log = RunLog::open((d / "events.jsonl").string(), def);
      std::ifstream in(d / "tokens.json");
      Json tokens = Json::parse(in);
      const std::string id = log->run().run_id;
      runs_.emplace(id, std::make_shared<HostedRun>(def, std::move(log), tokens.at("actors").get<std::map<std::string, std::string>>(),
                                                    tokens.at("ingest").get<std::string>()));
    }
  }

  const std::filesystem::path& data_dir() const { return dir_; }

  /// Request: {definition | definition_text, participants, run_id?, start_time?, metadata?}.
  CreatedRun create(const Json& request) {
    ObjectReader r(request, "");
    TrainingDefinition def;
    if (r.has("definition_text")) def = parse_definition(r.string("definition_text"));
    else def = definition_from_json(r.required("definition"));
    r.optional("definition");
    if (const auto report = validate_definition(def); report.has_errors())
      throw Error(ErrorCode::InvalidDefinition, "definition has " + std::to_string(report.error_count()) + " validation error(s)");

    TrainingRun run;
    run.run_id = r.string_or("run_id", "run-" + random_token().substr(0, 12));
    run.definition_id = def.id;
    run.start_time = r.has("start_time") ? r.timestamp("start_time")
                                         : std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
    r.each("participants", [&](const Json& v, const std::string& loc) { run.participants.push_back(participant_from_json(v, loc)); });
    if (r.has("metadata")) run.metadata = r.required("metadata");
    else run.metadata = Json::object();
    r.finish();
    if (run.run_id.empty() || run.run_id.find_first_of("/\\.") != std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "run_id must be non-empty and contain no '/', '\\' or '.'");
    if (run.actors_with(Role::Trainee).size() > static_cast<std::size_t>(def.max_participants))
      throw Error(ErrorCode::TooManyParticipants, "more trainees than max_participants");

    std::lock_guard lock(mutex_);
    if (runs_.count(run.run_id)) throw Error(ErrorCode::InvalidArgument, "run '" + run.run_id + "' already exists");
    auto shared_def = std::make_shared<const TrainingDefinition>(std::move(def));
    auto log = std::make_unique<RunLog>(run, shared_def);
    CreatedRun out{run.run_id, random_token(), {}};
    for (const auto& p : run.participants) out.tokens[p.actor_id] = random_token();

    const auto d = dir_ / "runs" / run.run_id;
    std::filesystem::create_directories(d);
    {
      std::ofstream f(d / "definition.json", std::ios::binary | std::ios::trunc);
      f << serialize_definition(*shared_def);
      std::ofstream t(d / "tokens.json", std::ios::binary | std::ios::trunc);
      t << canonical_dump(Json{{"actors", out.tokens}, {"ingest", out.ingest_token}});
      if (!f || !t) throw Error(ErrorCode::Io, "cannot write run directory " + d.string());
    }
    log->persist_to((d / "events.jsonl").string());
    runs_.emplace(run.run_id, std::make_shared<HostedRun>(shared_def, std::move(log), out.tokens, out.ingest_token));
    return out;
  }

  std::shared_ptr<HostedRun> get(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(run_id);
    if (it == runs_.end()) throw Error(ErrorCode::UnknownRun, "no run '" + run_id + "'");
    return it->second;
  }

  std::vector<std::string> run_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : runs_) out.push_back(id);
    return out;
  }

  void close_streams() {
    std::lock_guard lock(mutex_);
    for (const auto& [_, r] : runs_) r->close_streams();
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<HostedRun>> runs_;
};

struct GatewayOptions {
  std::string data_dir = "rangehall-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::chrono::milliseconds keepalive{15000};
};

/// Fills unset options from RANGEHALL_DATA_DIR / RANGEHALL_PORT.
inline GatewayOptions gateway_options_from_env(std::optional<std::string> data_dir, std::optional<int> port) {
  GatewayOptions o;
  if (data_dir) o.data_dir = *data_dir;
  else if (const char* env = std::getenv("RANGEHALL_DATA_DIR"); env && *env) o.data_dir = env;
  if (port) o.port = *port;
  else if (const char* env = std::getenv("RANGEHALL_PORT"); env && *env) {
    try {
      o.port = std::stoi(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string("RANGEHALL_PORT is not a number: ") + env);
    }
  }
  return o;
}

/// HTTP API and server-sent event stream over a RunStore.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options) : options_(std::move(options)), store_(options_.data_dir) { routes(); }

  ~Gateway() { stop(); }

  RunStore& store() { return store_; }

  /// Binds; port 0 picks a free one. Returns the bound port.
  int bind() {
    port_ = options_.port == 0 ? server_.bind_to_any_port(options_.host) : (server_.bind_to_port(options_.host, options_.port) ? options_.port : -1);
    if (port_ < 0) throw Error(ErrorCode::Io, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port_;
  }

  /// Serves until stop(). Call bind() first.
  void serve() { server_.listen_after_bind(); }

  void stop() {
    if (stopped_.exchange(true)) return;
    store_.close_streams();
    server_.stop();
  }

  int port() const { return port_; }
  bool running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  static std::string bearer(const httplib::Request& req) {
    const auto h = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (h.rfind(prefix, 0) == 0) return h.substr(prefix.size());
    if (req.has_param("token")) return req.get_param_value("token");  // EventSource cannot set headers
    return "";
  }

  static void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(canonical_dump(body), "application/json");
  }

  template <typename F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        reply(res, http_status_of(e.code()), error_body(e));
      } catch (const Json::exception& e) {
        reply(res, 400, Json{{"error", "SyntaxError"}, {"message", e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, Json{{"error", "Internal"}, {"message", e.what()}});
      }
    };
  }

  static Json parse_body(const httplib::Request& req) {
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw SyntaxError(1, e.byte, std::string("request body: ") + e.what());
    }
  }

  static void require_actor(const Caller& c, const std::string& actor) {
    if (!c.ingest && c.actor_id != actor) throw Error(ErrorCode::RoleForbidden, "token does not belong to '" + actor + "'");
  }

  static void require_role(const Caller& c, const TrainingRun& run, Role role) {
    if (c.ingest) return;
    const Participant* p = run.find(c.actor_id);
    if (!p || !p->has_role(role)) throw Error(ErrorCode::RoleForbidden, "requires the " + std::string(to_string(role)) + " role");
  }

  static std::optional<Timestamp> time_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) return std::nullopt;
    return parse_timestamp(req.get_param_value(name));
  }

  void routes() {
    server_.Post("/runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto created = store_.create(parse_body(req));
      reply(res, 201, Json{{"run_id", created.run_id}, {"ingest_token", created.ingest_token}, {"tokens", created.tokens}});
    }));

    server_.Post(R"(/runs/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      Json body = parse_body(req);
      Json items = body.is_array() ? body : body.is_object() && body.contains("events") ? body["events"] : Json::array({body});
      Json appended = Json::array();
      for (std::size_t i = 0; i < items.size(); ++i) {
        Json item = items[i];
        if (item.is_object() && !item.contains("timestamp"))
          item["timestamp"] = format_timestamp(std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()));
        const PendingEvent ev = pending_from_json(item, "/" + std::to_string(i));
        require_actor(caller, ev.actor_id);
        auto [env, channels] = run->ingest(ev);
        appended.push_back({{"seq", env.seq}, {"clock_skew", env.clock_skew}, {"channels", to_json(channels)}});
      }
      reply(res, 201, Json{{"appended", appended}});
    }));

    server_.Post(R"(/runs/([^/]+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      const TrainingRun header = run->log().run();
      require_role(caller, header, Role::Supervisor);
      std::optional<Timestamp> end;
      if (!req.body.empty()) {
        const Json body = parse_body(req);
        ObjectReader r(body, "");
        if (r.has("end_time")) end = r.timestamp("end_time");
        r.finish();
      }
      const RunSnapshot snap = run->log().snapshot();
      run->close(end.value_or(snap.horizon()));
      reply(res, 200, run_header_to_json(run->log().run()));
    }));

    server_.Get(R"(/runs/([^/]+)/view)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      if (!req.has_param("role") || !req.has_param("actor")) throw Error(ErrorCode::InvalidArgument, "view needs role and actor");
      const auto role = role_from_string(req.get_param_value("role"));
      if (!role) throw Error(ErrorCode::InvalidArgument, "unknown role '" + req.get_param_value("role") + "'");
      const std::string actor = req.get_param_value("actor");
      require_actor(caller, actor);
      const auto view = project_role_view(run->definition(), run->log().snapshot(), {actor, *role}, time_param(req, "as_of"));
      reply(res, 200, to_json(view));
    }));

    server_.Get(R"(/runs/([^/]+)/scoreboard)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      run->authenticate(bearer(req));
      const RunSnapshot snap = run->log().snapshot();
      const auto& def = run->definition();
      reply(res, 200, to_json(build_scoreboard(score_run(def, snap.events), scoreboard_subjects(def, snap.run))));
    }));

    server_.Get(R"(/runs/([^/]+)/alerts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      const RunSnapshot snap = run->log().snapshot();
      require_role(caller, snap.run, Role::Supervisor);
      const Timestamp now = time_param(req, "now").value_or(snap.horizon());
      reply(res, 200, Json{{"now", format_timestamp(now)}, {"alerts", to_json(detect_trouble(run->definition(), snap, now))}});
    }));

    server_.Get(R"(/runs/([^/]+)/feedback/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      const std::string actor = req.matches[2];
      const RunSnapshot snap = run->log().snapshot();
      if (!caller.ingest && caller.actor_id != actor) require_role(caller, snap.run, Role::Supervisor);
      reply(res, 200, to_json(personal_feedback(run->definition(), snap, actor)));
    }));

    server_.Get(R"(/runs/([^/]+)/stream)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto run = store_.get(req.matches[1]);
      const Caller caller = run->authenticate(bearer(req));
      auto sub = run->subscribe(caller);
      sub->push(sse_message("hello", {{"run_id", std::string(req.matches[1])},
                                      {"actor_id", caller.ingest ? Json(nullptr) : Json(caller.actor_id)}}));
      const auto keepalive = options_.keepalive;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [sub, keepalive](std::size_t, httplib::DataSink& sink) {
            std::deque<std::string> batch;
            {
              std::unique_lock lock(sub->m);
              sub->cv.wait_for(lock, keepalive, [&] { return sub->closed || !sub->queue.empty(); });
              batch.swap(sub->queue);
              if (sub->closed && batch.empty()) {
                lock.unlock();
                sink.done();
                return true;
              }
            }
            if (batch.empty()) batch.push_back(": keepalive\n\n");
            for (const auto& msg : batch)
              if (!sink.write(msg.data(), msg.size())) return false;
            return true;
          },
          [run, sub](bool) { run->unsubscribe(sub); });
    }));
  }

  GatewayOptions options_;
  RunStore store_;
  httplib::Server server_;
  int port_ = -1;
  std::atomic<bool> stopped_{false};
};

}  // namespace rangehall
