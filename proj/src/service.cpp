#include "fedsearch/service.hpp"

#include "fedsearch/error.hpp"
#include "fedsearch/wire.hpp"

#include <httplib.h>

namespace fedsearch {

namespace {

enum class Format { Xml, Json, Html };

Format negotiate(const httplib::Request& req) {
    const auto accept = req.get_header_value("Accept");
    const auto json = accept.find("application/json");
    const auto html = accept.find("text/html");
    const auto xml = std::min(accept.find("application/xml"), accept.find("text/xml"));
    if (json != std::string::npos && json < xml && json < html) return Format::Json;
    if (html != std::string::npos && html < xml && html < json) return Format::Html;
    return Format::Xml;
}

int status_for(const ResponseEnvelope& envelope) {
    if (const auto* err = std::get_if<ErrorBody>(&envelope.body)) return http_status(err->code);
    return 200;
}

void reply(const httplib::Request& req, httplib::Response& res, const ResponseEnvelope& envelope) {
    res.status = status_for(envelope);
    switch (negotiate(req)) {
    case Format::Json:
        res.set_content(encode_json(envelope).dump(-1, ' ', false,
                                                   nlohmann::json::error_handler_t::replace) +
                            "\n",
                        "application/json; charset=utf-8");
        break;
    case Format::Html:
        res.set_content(encode_html(envelope), "text/html; charset=utf-8");
        break;
    case Format::Xml:
        res.set_content(encode_xml(envelope), "application/xml; charset=utf-8");
        break;
    }
}

std::string raw_query(const httplib::Request& req) {
    const auto q = req.target.find('?');
    return q == std::string::npos ? std::string{} : req.target.substr(q + 1);
}

} // namespace

ResponseEnvelope handle(const Catalog& catalog, const DomainConfig& domains,
                        const QueryRequest& request, SuggestMatch suggest_match) {
    auto echo = request_pairs(request);
    EnvelopeBody body;
    try {
        switch (request.facility) {
        case Facility::LQF:
            body = ResultsBody{local_query(catalog, domains, request).hits};
            break;
        case Facility::RQF:
            body = CountBody{answer_remote(catalog, domains, request)};
            break;
        case Facility::SQF: {
            const auto collection = parse_collection_name(request.domain);
            if (!collection) {
                return error_envelope(std::move(echo), ErrorCode::DomainUnknown,
                                      "SQF domain must be a collection, got '" + request.domain + "'");
            }
            if (request.values.size() != 1) {
                return error_envelope(std::move(echo), ErrorCode::BadRequest, "SQF takes exactly one id");
            }
            body = ResultsBody{secondary_query(catalog, {*collection, request.values.front()}).hits};
            break;
        }
        case Facility::SUGGEST: {
            if (!domains.is_known(request.domain)) {
                return error_envelope(std::move(echo), ErrorCode::DomainUnknown,
                                      "unknown search domain '" + request.domain + "'");
            }
            if (request.values.size() != 1) {
                return error_envelope(std::move(echo), ErrorCode::BadRequest,
                                      "SUGGEST takes exactly one value");
            }
            body = SuggestionsBody{suggest(catalog, request.domain, request.values.front(), suggest_match)};
            break;
        }
        }
    } catch (const DomainError& e) {
        return error_envelope(std::move(echo), ErrorCode::DomainUnknown, e.what());
    } catch (const RequestError& e) {
        return error_envelope(std::move(echo), ErrorCode::BadRequest, e.what());
    } catch (const std::exception& e) {
        return error_envelope(std::move(echo), ErrorCode::Internal, e.what());
    }
    return {std::move(echo), std::move(body)};
}

HandledQuery handle_query_string(const Catalog& catalog, const DomainConfig& domains,
                                 std::string_view query, SuggestMatch suggest_match) {
    DecodedRequest decoded;
    try {
        decoded = decode_request(query, domains);
    } catch (const RequestError& e) {
        return {error_envelope(parse_query_string(query), ErrorCode::BadRequest, e.what()), {}};
    }
    return {handle(catalog, domains, decoded.request, suggest_match), std::move(decoded.warnings)};
}

// --- NodeServer ----------------------------------------------------------

void use_exclusive_port(httplib::Server& server) {
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
}

NodeServer::NodeServer(NodeOptions options, std::shared_ptr<CatalogStore> store,
                       DomainConfig domains, NodeRegistry registry,
                       std::shared_ptr<PeerTransport> transport)
    : options_(std::move(options)), store_(std::move(store)), domains_(std::move(domains)),
      registry_(std::move(registry)), transport_(std::move(transport)),
      server_(std::make_unique<httplib::Server>()) {
    use_exclusive_port(*server_);
    install_routes();
}

NodeServer::~NodeServer() { stop(); }

std::string NodeServer::base_url() const {
    return "http://" + options_.host + ":" + std::to_string(port_);
}

RemoteCountSet NodeServer::fan_out(const QueryRequest& request) const {
    QueryRequest lqf = request;
    lqf.facility = Facility::LQF;
    const auto local = local_query(*store_->snapshot(), domains_, lqf).count;
    return remote_query(registry_, request, local, transport_, options_.peer_timeout);
}

void NodeServer::install_routes() {
    auto& srv = *server_;

    srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok " + options_.name + "\n", "text/plain");
    });

    srv.Get("/query", [this](const httplib::Request& req, httplib::Response& res) {
        const auto snapshot = store_->snapshot();
        auto handled = handle_query_string(*snapshot, domains_, raw_query(req), options_.suggest_match);
        for (const auto& w : handled.warnings) res.set_header("X-Query-Warning", w);
        reply(req, res, handled.envelope);
    });

    srv.Get("/remote", [this](const httplib::Request& req, httplib::Response& res) {
        const auto query = raw_query(req);
        DecodedRequest decoded;
        try {
            decoded = decode_request(query, domains_);
        } catch (const RequestError& e) {
            reply(req, res, error_envelope(parse_query_string(query), ErrorCode::BadRequest, e.what()));
            return;
        }
        auto request = decoded.request;
        request.facility = Facility::RQF;
        auto echo = request_pairs(request);
        try {
            auto counts = fan_out(request);
            reply(req, res, {std::move(echo), RemoteBody{std::move(counts)}});
        } catch (const DomainError& e) {
            reply(req, res, error_envelope(std::move(echo), ErrorCode::DomainUnknown, e.what()));
        } catch (const RequestError& e) {
            reply(req, res, error_envelope(std::move(echo), ErrorCode::BadRequest, e.what()));
        }
    });

    auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
        if (!options_.admin_token.empty() &&
            req.get_header_value("X-Admin-Token") == options_.admin_token) {
            return true;
        }
        reply(req, res, error_envelope({}, ErrorCode::Forbidden, "admin token missing or wrong"));
        return false;
    };

    srv.Post("/admin/entry", [this, authorized](const httplib::Request& req, httplib::Response& res) {
        if (!authorized(req, res)) return;
        Entry entry;
        try {
            const auto root = xml::parse(req.body, "request body");
            if (root.name != "entry") throw ParseError("request body", root.line, "expected <entry>");
            entry = entry_from_result_element(root, "request body");
        } catch (const ParseError& e) {
            reply(req, res, error_envelope({}, ErrorCode::BadRequest, e.what()));
            return;
        }
        const auto ref = format_ref(entry_id(entry));
        try {
            store_->upsert(std::move(entry));
        } catch (const IntegrityError& e) {
            reply(req, res, error_envelope({}, ErrorCode::Conflict, e.what()));
            return;
        }
        reply(req, res, {{}, AckBody{"upsert", ref, true}});
    });

    srv.Delete(R"(/admin/entry/([^/]+)/([^/]+))",
               [this, authorized](const httplib::Request& req, httplib::Response& res) {
                   if (!authorized(req, res)) return;
                   const auto collection = parse_collection_name(req.matches[1].str());
                   if (!collection) {
                       reply(req, res, error_envelope({}, ErrorCode::DomainUnknown,
                                                      "unknown collection '" + req.matches[1].str() + "'"));
                       return;
                   }
                   const EntryId id{*collection, req.matches[2].str()};
                   bool removed = false;
                   try {
                       removed = store_->remove(id);
                   } catch (const IntegrityError& e) {
                       reply(req, res, error_envelope({}, ErrorCode::Conflict, e.what()));
                       return;
                   }
                   reply(req, res, {{}, AckBody{"remove", format_ref(id), removed}});
               });

    if (!options_.ui_directory.empty()) srv.set_mount_point("/ui", options_.ui_directory);

    srv.set_exception_handler(
        [](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
            std::string message = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                message = e.what();
            } catch (...) {
            }
            reply(req, res, error_envelope({}, ErrorCode::Internal, message));
        });

    srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        const auto status = res.status;
        reply(req, res, error_envelope({}, ErrorCode::BadRequest, "no route for " + req.method + " " + req.path));
        res.status = status;
    });
}

int NodeServer::bind() {
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.host);
    } else {
        port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    }
    if (port_ < 0) {
        throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    return port_;
}

void NodeServer::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void NodeServer::run() {
    bind();
    server_->listen_after_bind();
}

void NodeServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace fedsearch
