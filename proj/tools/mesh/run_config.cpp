#include "mesh/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "mesh/error.hpp"

namespace mesh::cli {

RunConfig RunConfig::from_ini(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("config file not found: " + path.string());
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw UsageError(std::string("malformed config: ") + e.what());
    }
    RunConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            c.values_[section] = body.data();
            continue;
        }
        for (const auto& [key, leaf] : body) c.values_[section + "." + key] = leaf.data();
    }
    return c;
}

void RunConfig::set_assignment(const std::string& a) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + a + "'");
    const auto dot = a.find('.');
    if (dot == 0 || dot == std::string::npos || dot + 1 >= eq)
        throw UsageError("--set keys are section.key, got '" + a.substr(0, eq) + "'");
    values_[a.substr(0, eq)] = a.substr(eq + 1);
}

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
}

std::string RunConfig::required(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw UsageError("missing required setting '" + key + "'");
    resolved_[key] = it->second;
    return it->second;
}

double RunConfig::real(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = format_real(fallback);
        return fallback;
    }
    double v = 0.0;
    const auto& s = it->second;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw UsageError("setting '" + key + "' is not a number: '" + s + "'");
    resolved_[key] = s;
    return v;
}

std::uint64_t RunConfig::u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    std::uint64_t v = 0;
    const auto& s = it->second;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw UsageError("setting '" + key + "' is not a nonnegative integer: '" + s + "'");
    resolved_[key] = s;
    return v;
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = fallback ? "true" : "false";
        return fallback;
    }
    const auto& s = it->second;
    resolved_[key] = s;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw UsageError("setting '" + key + "' is not a boolean: '" + s + "'");
}

std::vector<double> RunConfig::reals(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        std::string joined;
        for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? "," : "") + format_real(fallback[i]);
        resolved_[key] = joined;
        return fallback;
    }
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc() || r.ptr != item.data() + item.size())
            throw UsageError("setting '" + key + "' has a non-numeric entry '" + item + "'");
        out.push_back(v);
    }
    resolved_[key] = it->second;
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string() + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string format_real(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace mesh::cli
