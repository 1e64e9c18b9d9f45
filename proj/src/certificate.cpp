#include "sctl/certificate.hpp"

#include <fstream>

#include <json.hpp>

#include "sctl/errors.hpp"

namespace sctl {

Certificate make_certificate(std::string name, std::uint64_t digest, double bound, double measured,
                             double tolerance, std::string notes, std::uint64_t seed) {
    Certificate c;
    c.name = std::move(name);
    c.inputs_digest = digest;
    c.bound_value = bound;
    c.measured_value = measured;
    c.margin = bound - measured;
    c.tolerance = tolerance;
    c.status = (measured <= bound + tolerance) ? CertStatus::Pass : CertStatus::Fail;
    c.notes = std::move(notes);
    c.seed = seed;
    return c;
}

Certificate make_inconclusive(std::string name, std::uint64_t digest, double bound, double measured,
                              double tolerance, std::string notes, std::uint64_t seed) {
    Certificate c;
    c.name = std::move(name);
    c.inputs_digest = digest;
    c.bound_value = bound;
    c.measured_value = measured;
    c.margin = bound - measured;
    c.tolerance = tolerance;
    c.status = CertStatus::Inconclusive;
    c.notes = std::move(notes);
    c.seed = seed;
    return c;
}

namespace {

nlohmann::json cert_json(const Certificate& cert) {
    nlohmann::json j;
    j["name"] = cert.name;
    j["inputs_hash"] = cert.inputs_digest;
    j["bound"] = cert.bound_value;
    j["measured"] = cert.measured_value;
    j["margin"] = cert.margin;
    j["tolerance"] = cert.tolerance;
    j["pass"] = cert.pass();
    j["status"] = cert.status == CertStatus::Pass          ? "pass"
                  : cert.status == CertStatus::Inconclusive ? "inconclusive"
                                                            : "fail";
    if (!cert.notes.empty()) j["notes"] = cert.notes;
    j["seed"] = cert.seed;
    return j;
}

}  // namespace

std::string to_json(const Certificate& cert) { return cert_json(cert).dump(2); }

void write_certificates(const std::string& path, const std::vector<Certificate>& certs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : certs) arr.push_back(cert_json(c));
    std::ofstream os(path);
    if (!os) throw InputError("write_certificates: cannot open " + path);
    os << arr.dump(2) << '\n';
}

CampaignSummary summarize(const std::string& name, const std::vector<Certificate>& certs,
                          std::uint64_t seed) {
    CampaignSummary s;
    s.name = name;
    s.seed = seed;
    for (const auto& c : certs) {
        if (c.status == CertStatus::Pass)
            ++s.n_pass;
        else if (c.status == CertStatus::Fail)
            ++s.n_fail;
        else
            ++s.n_inconclusive;
    }
    return s;
}

}  // namespace sctl
