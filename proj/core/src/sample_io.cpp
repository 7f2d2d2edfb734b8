#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mesh/error.hpp"
#include "mesh/fit_mcmc.hpp"

namespace mesh {
namespace {

static_assert(std::endian::native == std::endian::little, "sample files assume a little-endian host");

constexpr char kMagic[8] = {'M', 'E', 'S', 'H', 'S', 'M', 'P', '1'};
constexpr std::size_t kMetaCols = 4;  // chain, iteration, log_lik, log_post

using nlohmann::json;

std::string kind_name(PredictorKind k) {
    switch (k) {
        case PredictorKind::Team: return "team";
        case PredictorKind::Player: return "player";
        case PredictorKind::PlayerPair: return "pair";
    }
    return "?";
}

PredictorKind kind_from(const std::string& s) {
    if (s == "team") return PredictorKind::Team;
    if (s == "player") return PredictorKind::Player;
    if (s == "pair") return PredictorKind::PlayerPair;
    throw DataError("unknown predictor kind '" + s + "' in sample sidecar");
}

json config_json(const ChainConfig& c) {
    return {{"n_chains", c.n_chains},
            {"burn_in", c.burn_in},
            {"thin", c.thin},
            {"draws_per_chain", c.draws_per_chain},
            {"min_kept", c.min_kept},
            {"adapt_interval", c.adapt_interval},
            {"accept_low", c.accept_low},
            {"accept_high", c.accept_high},
            {"refresh_interval", c.refresh_interval},
            {"grid", {{"points", c.grid.points}, {"s_min", c.grid.s_min}, {"s_max", c.grid.s_max},
                      {"f_min", c.grid.f_min}, {"f_max", c.grid.f_max}}},
            {"hyper_priors", {{"gamma_shape", c.hyper_priors.gamma_shape}, {"gamma_rate", c.hyper_priors.gamma_rate},
                              {"invgamma_shape", c.hyper_priors.invgamma_shape},
                              {"invgamma_scale", c.hyper_priors.invgamma_scale}}},
            {"sample_hyper", c.sample_hyper},
            {"sample_intercepts", c.sample_intercepts},
            {"intercept_prior_mean", c.intercept_prior_mean},
            {"intercept_prior_sd", c.intercept_prior_sd},
            {"init_from_mle", c.init_from_mle},
            {"init_jitter", c.init_jitter},
            {"seed", c.seed},
            {"debug_likelihood_power", c.debug_likelihood_power}};
}

ChainConfig config_from(const json& j) {
    ChainConfig c;
    c.n_chains = j.at("n_chains");
    c.burn_in = j.at("burn_in");
    c.thin = j.at("thin");
    c.draws_per_chain = j.at("draws_per_chain");
    c.min_kept = j.at("min_kept");
    c.adapt_interval = j.at("adapt_interval");
    c.accept_low = j.at("accept_low");
    c.accept_high = j.at("accept_high");
    c.refresh_interval = j.at("refresh_interval");
    const auto& g = j.at("grid");
    c.grid = {g.at("points"), g.at("s_min"), g.at("s_max"), g.at("f_min"), g.at("f_max")};
    const auto& h = j.at("hyper_priors");
    c.hyper_priors = {h.at("gamma_shape"), h.at("gamma_rate"), h.at("invgamma_shape"), h.at("invgamma_scale")};
    c.sample_hyper = j.at("sample_hyper");
    c.sample_intercepts = j.at("sample_intercepts");
    c.intercept_prior_mean = j.at("intercept_prior_mean");
    c.intercept_prior_sd = j.at("intercept_prior_sd");
    c.init_from_mle = j.at("init_from_mle");
    c.init_jitter = j.at("init_jitter");
    c.seed = j.at("seed");
    c.debug_likelihood_power = j.at("debug_likelihood_power");
    return c;
}

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::filesystem::path sidecar(const std::filesystem::path& p) { return p.string() + ".json"; }

}  // namespace

void save_samples(const std::filesystem::path& path, const PosteriorSamples& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write samples file " + path.string());
    const std::size_t nc = s.n_cols();
    out.write(kMagic, sizeof kMagic);
    write_u64(out, s.n_draws);
    write_u64(out, nc + kMetaCols);
    auto put = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    for (std::size_t d = 0; d < s.n_draws; ++d) put(static_cast<double>(s.chain[d]));
    for (std::size_t d = 0; d < s.n_draws; ++d) put(static_cast<double>(s.iteration[d]));
    for (std::size_t d = 0; d < s.n_draws; ++d) put(s.log_lik[d]);
    for (std::size_t d = 0; d < s.n_draws; ++d) put(s.log_post[d]);
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t d = 0; d < s.n_draws; ++d) put(s.at(d, j));
    if (!out) throw DataError("short write on samples file " + path.string());

    json j;
    j["format"] = "MESHSMP1";
    j["layout"] = "column-major float64, little-endian; leading columns chain, iteration, log_lik, log_post";
    j["n_draws"] = s.n_draws;
    j["columns"] = s.columns;
    json reg = json::array();
    for (const auto& p : s.registry)
        reg.push_back({{"label", p.label}, {"kind", kind_name(p.kind)}, {"group", to_string(p.group)},
                       {"defense_only", p.defense_only}, {"frozen_capable", p.frozen_capable},
                       {"members", p.members}});
    j["registry"] = reg;
    json slots = json::array();
    for (const auto& h : s.hyper_slots)
        slots.push_back({{"group", to_string(h.group)}, {"side", to_string(h.side)}, {"family", to_string(h.kind)},
                         {"lambda_col", h.lambda_col == SIZE_MAX ? json(nullptr) : json(h.lambda_col)},
                         {"sigma2_col", h.sigma2_col == SIZE_MAX ? json(nullptr) : json(h.sigma2_col)}});
    j["hyper_slots"] = slots;
    j["config"] = config_json(s.config);
    j["seed"] = s.config.seed;
    j["acceptance"] = s.acceptance;
    j["ess"] = s.ess;
    j["lag1"] = s.lag1;
    j["warnings"] = s.warnings;
    std::ofstream js(sidecar(path));
    if (!js) throw DataError("cannot write sidecar " + sidecar(path).string());
    js << j.dump(1) << '\n';
}

PosteriorSamples load_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open samples file " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a samples file: " + path.string());
    const std::uint64_t rows = read_u64(in), cols = read_u64(in);
    if (cols < kMetaCols) throw DataError("samples file has too few columns");
    std::vector<double> raw(rows * cols);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!in) throw DataError("truncated samples file " + path.string());

    std::ifstream js(sidecar(path));
    if (!js) throw DataError("missing sidecar " + sidecar(path).string());
    json j;
    try {
        js >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed sidecar: ") + e.what());
    }

    PosteriorSamples s;
    s.columns = j.at("columns").get<std::vector<std::string>>();
    if (s.columns.size() + kMetaCols != cols) throw DataError("sidecar column count disagrees with samples file");
    for (const auto& r : j.at("registry")) {
        Predictor p;
        p.label = r.at("label");
        p.kind = kind_from(r.at("kind"));
        p.group = pool_group_from_string(r.at("group"));
        p.defense_only = r.at("defense_only");
        p.frozen_capable = r.at("frozen_capable");
        p.members = r.at("members").get<std::vector<std::string>>();
        s.registry.push_back(std::move(p));
    }
    for (const auto& h : j.at("hyper_slots")) {
        HyperSlot slot;
        slot.group = pool_group_from_string(h.at("group"));
        slot.side = h.at("side") == "offense" ? Side::Offense : Side::Defense;
        slot.kind = penalty_kind_from_string(h.at("family"));
        if (!h.at("lambda_col").is_null()) slot.lambda_col = h.at("lambda_col");
        if (!h.at("sigma2_col").is_null()) slot.sigma2_col = h.at("sigma2_col");
        s.hyper_slots.push_back(slot);
    }
    s.config = config_from(j.at("config"));
    s.acceptance = j.at("acceptance").get<std::vector<std::vector<double>>>();
    s.ess = j.at("ess").get<std::vector<double>>();
    s.lag1 = j.at("lag1").get<std::vector<double>>();
    s.warnings = j.at("warnings").get<std::vector<std::string>>();

    s.n_draws = rows;
    const std::size_t nc = s.columns.size();
    auto col = [&](std::size_t c) { return raw.data() + c * rows; };
    for (std::size_t d = 0; d < rows; ++d) {
        s.chain.push_back(static_cast<std::uint32_t>(col(0)[d]));
        s.iteration.push_back(static_cast<std::uint32_t>(col(1)[d]));
        s.log_lik.push_back(col(2)[d]);
        s.log_post.push_back(col(3)[d]);
    }
    s.values.resize(rows * nc);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t d = 0; d < rows; ++d) s.values[d * nc + c] = col(kMetaCols + c)[d];
    return s;
}

}  // namespace mesh
