#include "absspec/config.hpp"

#include <fstream>
#include <sstream>

#include "absspec/errors.hpp"

namespace absspec {

namespace {

template <class T>
void take(const nlohmann::json& obj, const char* key, T& field) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        field = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tolerance override '") + key + "': " + e.what());
    }
}

} // namespace

void Config::apply_overrides(const nlohmann::json& o) {
    if (!o.is_object()) throw ConfigError("tolerance overrides must be a JSON object");
    if (auto it = o.find("tol"); it != o.end()) {
        const auto& t = *it;
        take(t, "clusterRel", tol.clusterRel);
        take(t, "rankRel", tol.rankRel);
        take(t, "orthonormality", tol.orthonormality);
        take(t, "intersection", tol.intersection);
        take(t, "locusGap", tol.locusGap);
        take(t, "certifyGap", tol.certifyGap);
        take(t, "fdStepRel", tol.fdStepRel);
        take(t, "distinctRel", tol.distinctRel);
        take(t, "derivativeMin", tol.derivativeMin);
        take(t, "orderingMargin", tol.orderingMargin);
        take(t, "seam", tol.seam);
        take(t, "containmentMargin", tol.containmentMargin);
        take(t, "onLocus", tol.onLocus);
    }
    if (auto it = o.find("flow"); it != o.end()) {
        const auto& f = *it;
        take(f, "relTol", flow.relTol);
        take(f, "absTol", flow.absTol);
        take(f, "maxStep", flow.maxStep);
        take(f, "tailChunkNorm", flow.tailChunkNorm);
        take(f, "maxSteps", flow.maxSteps);
    }
    if (auto it = o.find("contour"); it != o.end()) {
        const auto& c = *it;
        take(c, "initialSamples", contour.initialSamples);
        take(c, "maxSamples", contour.maxSamples);
        take(c, "maxPhaseStep", contour.maxPhaseStep);
        take(c, "maxLogMagStep", contour.maxLogMagStep);
        take(c, "zeroTol", contour.zeroTol);
        take(c, "perturbation", contour.perturbation);
        take(c, "maxPerturbations", contour.maxPerturbations);
    }
    take(o, "exclusionRadius", exclusionRadius);
    take(o, "jobs", jobs);
    if (exclusionRadius <= 0.0 || exclusionRadius >= 0.7) {
        throw ConfigError("exclusionRadius must lie in (0, 0.7) so the two neighbourhoods stay disjoint");
    }
    if (contour.initialSamples < 4 || contour.maxSamples < contour.initialSamples) {
        throw ConfigError("contour sample counts are inconsistent");
    }
}

void Config::load_overrides_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tolerance file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("tolerance file " + path + ": " + e.what());
    }
    apply_overrides(j);
}

nlohmann::json Config::to_json() const {
    nlohmann::json j;
    j["tol"] = {{"clusterRel", tol.clusterRel},
                {"rankRel", tol.rankRel},
                {"orthonormality", tol.orthonormality},
                {"intersection", tol.intersection},
                {"locusGap", tol.locusGap},
                {"certifyGap", tol.certifyGap},
                {"fdStepRel", tol.fdStepRel},
                {"distinctRel", tol.distinctRel},
                {"derivativeMin", tol.derivativeMin},
                {"orderingMargin", tol.orderingMargin},
                {"seam", tol.seam},
                {"containmentMargin", tol.containmentMargin},
                {"onLocus", tol.onLocus}};
    j["flow"] = {{"relTol", flow.relTol},
                 {"absTol", flow.absTol},
                 {"maxStep", flow.maxStep},
                 {"tailChunkNorm", flow.tailChunkNorm},
                 {"maxSteps", flow.maxSteps}};
    j["contour"] = {{"initialSamples", contour.initialSamples},
                    {"maxSamples", contour.maxSamples},
                    {"maxPhaseStep", contour.maxPhaseStep},
                    {"maxLogMagStep", contour.maxLogMagStep},
                    {"zeroTol", contour.zeroTol},
                    {"perturbation", contour.perturbation},
                    {"maxPerturbations", contour.maxPerturbations}};
    j["exclusionRadius"] = exclusionRadius;
    j["jobs"] = jobs;
    return j;
}

} // namespace absspec
