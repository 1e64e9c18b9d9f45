#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sctl {

enum class CertStatus { Pass, Fail, Inconclusive };

// Machine-checkable record that a measured quantity satisfies an inequality
// within a declared tolerance.  For conclusive certificates,
// pass <=> measured <= bound + tolerance.  Inconclusive means the evaluation
// error could not be certified below the required fraction of the margin.
struct Certificate {
    std::string name;
    std::uint64_t inputs_digest = 0;
    double bound_value = 0.0;
    double measured_value = 0.0;
    double margin = 0.0;  // bound - measured
    double tolerance = 0.0;
    CertStatus status = CertStatus::Fail;
    std::string notes;
    std::uint64_t seed = 0;

    bool pass() const { return status == CertStatus::Pass; }
};

Certificate make_certificate(std::string name, std::uint64_t digest, double bound, double measured,
                             double tolerance, std::string notes = {}, std::uint64_t seed = 0);

Certificate make_inconclusive(std::string name, std::uint64_t digest, double bound, double measured,
                              double tolerance, std::string notes, std::uint64_t seed = 0);

std::string to_json(const Certificate& cert);
void write_certificates(const std::string& path, const std::vector<Certificate>& certs);

struct CampaignSummary {
    std::string name;
    int n_pass = 0;
    int n_fail = 0;
    int n_inconclusive = 0;
    std::uint64_t seed = 0;

    int total() const { return n_pass + n_fail + n_inconclusive; }
};

CampaignSummary summarize(const std::string& name, const std::vector<Certificate>& certs,
                          std::uint64_t seed);

}  // namespace sctl
