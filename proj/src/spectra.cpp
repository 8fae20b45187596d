#include "absspec/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

#include "absspec/errors.hpp"
#include "absspec/parallel.hpp"

namespace absspec {

std::string to_string(Side side) {
    switch (side) {
    case Side::Plus: return "plus";
    case Side::Minus: return "minus";
    case Side::Zero: return "zero";
    }
    return "plus";
}

Side parse_side(const std::string& text) {
    if (text == "plus") return Side::Plus;
    if (text == "minus") return Side::Minus;
    if (text == "zero") return Side::Zero;
    throw ConfigError("unknown side '" + text + "' (expected plus, minus or zero)");
}

std::string to_string(DiskRegion r) {
    switch (r) {
    case DiskRegion::B1: return "B1";
    case DiskRegion::B2: return "B2";
    case DiskRegion::OnLocus: return "on-locus";
    }
    return "on-locus";
}

GapFunction::GapFunction(const CoefficientProfile& profile, Side side, int index, const Config& cfg)
    : profile_(&profile), side_(side), index_(index), cfg_(cfg) {
    const int N = profile.dimension();
    const int hi = side == Side::Zero ? N : N - 1;
    if (index < 1 || index > hi) {
        throw ShapeError("gap index " + std::to_string(index) + " out of range for N = " + std::to_string(N));
    }
}

GapFunction GapFunction::for_problem(const CoefficientProfile& profile, const BoundaryData& boundary, Side side,
                                     const Config& cfg) {
    switch (side) {
    case Side::Plus: return GapFunction(profile, side, boundary.i_minus(), cfg);
    case Side::Minus: return GapFunction(profile, side, boundary.i_plus(), cfg);
    case Side::Zero: break;
    }
    return GapFunction(profile, side, profile.crossing_index(), cfg);
}

std::vector<cd> GapFunction::raw(cd lambda) const {
    const TailSide t = side_ == Side::Minus ? TailSide::Minus : TailSide::Plus;
    return tail_operator(*profile_, t, lambda, cfg_.flow).raw_eigenvalues();
}

cd GapFunction::exponent(cd r) const {
    return profile_->tails_constant() ? r : std::log(r) / profile_->period();
}

double GapFunction::real_exponent(cd r) const {
    return profile_->tails_constant() ? r.real() : std::log(std::abs(r)) / profile_->period();
}

SortedSpectrum GapFunction::sort(const std::vector<cd>& r) const {
    std::vector<cd> e;
    e.reserve(r.size());
    double scale = 0.0;
    for (const cd& v : r) {
        e.push_back(exponent(v));
        scale += std::abs(e.back());
    }
    return sort_spectrum(e, scale, cfg_.tol);
}

SortedSpectrum GapFunction::spectrum(cd lambda) const { return sort(raw(lambda)); }

GapValue GapFunction::value(cd lambda) const {
    const SortedSpectrum s = spectrum(lambda);
    const auto i = static_cast<std::size_t>(index_);
    GapValue v;
    v.muI = s[i - 1];
    v.muIp1 = i < s.size() ? s[i] : cd(0.0, 0.0);
    if (side_ == Side::Zero) {
        v.flagged = (i >= 2 && s.coincident(i - 2)) || (i < s.size() && s.coincident(i - 1));
        double m = std::numeric_limits<double>::infinity();
        for (const cd& mu : s.values) m = std::min(m, std::abs(mu.real()));
        v.gap = v.flagged ? std::numeric_limits<double>::quiet_NaN() : (s[i - 1].real() >= 0.0 ? m : -m);
    } else {
        v.flagged = s.coincident(i - 1);
        v.gap = v.flagged ? std::numeric_limits<double>::quiet_NaN() : s[i - 1].real() - s[i].real();
    }
    return v;
}

std::vector<cd> GapFunction::continue_raw(cd from, cd to, const std::vector<cd>& startRaw) const {
    return track_values([this](cd l) { return raw(l); }, from, to, startRaw).values;
}

std::vector<char> GapFunction::upper_group(const std::vector<cd>& r) const {
    std::vector<char> mask(r.size(), 0);
    if (side_ == Side::Zero) {
        for (std::size_t j = 0; j < r.size(); ++j) mask[j] = real_exponent(r[j]) > 0.0;
    } else {
        const SortedSpectrum s = sort(r);
        for (int j = 0; j < index_; ++j) mask[static_cast<std::size_t>(s.schurIndex[static_cast<std::size_t>(j)])] = 1;
    }
    return mask;
}

double GapFunction::separation(const std::vector<cd>& r, const std::vector<char>& upper) const {
    double minUp = std::numeric_limits<double>::infinity(), maxLow = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double re = real_exponent(r[j]);
        if (upper[j]) minUp = std::min(minUp, re);
        else maxLow = std::max(maxLow, re);
    }
    if (side_ == Side::Zero) return std::min(minUp, -maxLow);
    return minUp - maxLow;
}

std::pair<int, int> GapFunction::pair_positions(const std::vector<cd>& r) const {
    const SortedSpectrum s = sort(r);
    const auto i = static_cast<std::size_t>(index_);
    const int p = s.schurIndex[i - 1];
    if (side_ == Side::Zero) return {p, -1};
    return {p, s.schurIndex[i]};
}

cd GapFunction::label_increment(cd lambda, const std::vector<cd>& r, std::pair<int, int> labels, cd at) const {
    const std::vector<cd> c = continue_raw(lambda, at, r);
    auto delta = [&](int j) {
        const auto u = static_cast<std::size_t>(j);
        // Ratio form avoids branch jumps of the logarithm for multipliers.
        return profile_->tails_constant() ? c[u] - r[u] : std::log(c[u] / r[u]) / profile_->period();
    };
    return labels.second < 0 ? delta(labels.first) : delta(labels.first) - delta(labels.second);
}

cd GapFunction::derivative(cd lambda) const {
    const std::vector<cd> r = raw(lambda);
    const auto labels = pair_positions(r);
    const double h = cfg_.tol.fdStepRel * (1.0 + std::abs(lambda));
    const cd I(0.0, 1.0);
    const cd fp = label_increment(lambda, r, labels, lambda + h);
    const cd fm = label_increment(lambda, r, labels, lambda - h);
    const cd fip = label_increment(lambda, r, labels, lambda + I * h);
    const cd fim = label_increment(lambda, r, labels, lambda - I * h);
    return (fp - fm - I * (fip - fim)) / (4.0 * h);
}

std::size_t SpectrumLocus::vertex_count() const {
    std::size_t n = 0;
    for (const auto& p : polylines) n += p.vertices.size();
    return n;
}

void SpectrumLocus::write_csv(std::ostream& os) const {
    os << "# absspec locus v1 side=" << to_string(side) << " index=" << index << " polylines=" << polylines.size()
       << '\n';
    os << "re_lambda,im_lambda,gap,mu_i_re,mu_i_im,mu_ip1_re,mu_ip1_im,dgap_dlambda_re,dgap_dlambda_im,"
          "nondegenerate\n";
    os << std::setprecision(17);
    for (std::size_t p = 0; p < polylines.size(); ++p) {
        if (p > 0) os << '\n';
        for (const auto& v : polylines[p].vertices) {
            os << v.lambda.real() << ',' << v.lambda.imag() << ',' << v.gap << ',' << v.muI.real() << ','
               << v.muI.imag() << ',' << v.muIp1.real() << ',' << v.muIp1.imag() << ',' << v.derivative.real()
               << ',' << v.derivative.imag() << ',' << (v.nondegenerate ? 1 : 0) << '\n';
        }
    }
}

NondegeneracyReport certify_nondegenerate(const GapFunction& g, cd lambdaStar) {
    const Tolerances& tol = g.config().tol;
    const std::vector<cd> r = g.raw(lambdaStar);
    const SortedSpectrum s = g.sort(r);
    const auto i = static_cast<std::size_t>(g.index());
    const std::size_t N = s.size();

    NondegeneracyReport rep;
    rep.lambda = lambdaStar;
    rep.side = g.side();
    rep.index = g.index();
    rep.muI = s[i - 1];
    rep.muIp1 = i < N ? s[i] : cd(0.0, 0.0);
    rep.gap = g.side() == Side::Zero ? s[i - 1].real() : s[i - 1].real() - s[i].real();
    if (!(std::abs(rep.gap) <= tol.certifyGap)) {
        throw PreconditionError("certify_nondegenerate: |gap| = " + std::to_string(std::abs(rep.gap)) +
                                " exceeds the certification bound");
    }
    const double scale = 1.0 + s.scale;

    if (g.side() == Side::Zero) {
        // Only mu^k on the imaginary axis: neighbours strictly on either side.
        rep.marginAbove = i >= 2 ? s[i - 2].real() : std::numeric_limits<double>::infinity();
        rep.marginBelow = i < N ? -s[i].real() : std::numeric_limits<double>::infinity();
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < N; ++j)
            if (j != i - 1) d = std::min(d, std::abs(s[j] - s[i - 1]));
        rep.distinctness = d;
    } else {
        rep.marginAbove = i >= 2 ? s[i - 2].real() - s[i - 1].real() : std::numeric_limits<double>::infinity();
        rep.marginBelow = i + 1 < N ? s[i].real() - s[i + 1].real() : std::numeric_limits<double>::infinity();
        rep.distinctness = std::abs(s[i - 1] - s[i]);
    }
    rep.orderingOk = rep.marginAbove > tol.orderingMargin * scale && rep.marginBelow > tol.orderingMargin * scale;
    rep.distinct = rep.distinctness > tol.distinctRel * scale;

    if (rep.distinct) {
        rep.derivative = g.derivative(lambdaStar);
        rep.derivativeNonzero = std::abs(rep.derivative) > tol.derivativeMin;

        // Off-locus samples around lambda*: the derivative must not be purely
        // imaginary there. The margin is reported, the threshold is the
        // derivative floor.
        const double rad = 1e-2 * (1.0 + std::abs(lambdaStar));
        double margin = std::numeric_limits<double>::infinity();
        int used = 0;
        for (int q = 0; q < 4; ++q) {
            const cd z = lambdaStar + rad * std::polar(1.0, 0.5 * M_PI * q + 0.25 * M_PI);
            const GapValue v = g.value(z);
            if (v.flagged || std::abs(v.gap) <= tol.onLocus) continue;
            margin = std::min(margin, std::abs(g.derivative(z).real()));
            ++used;
        }
        rep.imaginaryMargin = used > 0 ? margin : 0.0;
        rep.notImaginary = used > 0 && margin > tol.derivativeMin;
    } else {
        rep.derivative = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
    }
    rep.nondegenerate = rep.orderingOk && rep.distinct && rep.derivativeNonzero && rep.notImaginary;
    return rep;
}

namespace {

struct Node {
    cd lambda;
    std::vector<cd> raw;
    std::vector<char> upper;
};

struct Crossing {
    bool found = false;
    cd lambda;
};

// Bisection on one grid edge with labels continued from the start node.
Crossing bisect_edge(const GapFunction& g, const Node& a, const Node& b) {
    Crossing out;
    std::vector<cd> endRaw = g.continue_raw(a.lambda, b.lambda, a.raw);
    if (!(g.separation(endRaw, a.upper) < 0.0)) return out;
    out.found = true;
    const double tolGap = g.config().tol.locusGap;
    double lo = 0.0, hi = 1.0;
    std::vector<cd> loRaw = a.raw;
    auto at = [&](double t) { return a.lambda + t * (b.lambda - a.lambda); };
    cd best = at(0.5);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        best = at(mid);
        const std::vector<cd> midRaw = g.continue_raw(at(lo), best, loRaw);
        const double s = g.separation(midRaw, a.upper);
        const GapValue v = g.value(best);
        if (!v.flagged && std::abs(v.gap) <= tolGap) break;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) break;
        if (s >= 0.0) {
            lo = mid;
            loRaw = midRaw;
        } else {
            hi = mid;
        }
    }
    out.lambda = best;
    return out;
}

LocusVertex make_vertex(const GapFunction& g, cd lambda) {
    LocusVertex v;
    v.lambda = lambda;
    const GapValue gv = g.value(lambda);
    v.gap = gv.gap;
    v.muI = gv.muI;
    v.muIp1 = gv.muIp1;
    try {
        const NondegeneracyReport rep = certify_nondegenerate(g, lambda);
        v.derivative = rep.derivative;
        v.nondegenerate = rep.nondegenerate;
    } catch (const PreconditionError&) {
        v.derivative = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
        v.nondegenerate = false;
    }
    return v;
}

} // namespace

SpectrumLocus trace_locus(const GapFunction& g, const ParameterDomain& domain, int jobs) {
    const int n = domain.resolution;
    const auto [re0, re1, im0, im1] = domain.bounds();
    const double dx = (re1 - re0) / (n - 1), dy = (im1 - im0) / (n - 1);
    const Tolerances& tol = g.config().tol;

    // Nodes, nudged off the locus so every edge test starts from a clean split.
    std::vector<Node> nodes(static_cast<std::size_t>(n * n));
    parallel_for(nodes.size(), jobs, [&](std::size_t id) {
        const int a = static_cast<int>(id % static_cast<std::size_t>(n)), b = static_cast<int>(id / static_cast<std::size_t>(n));
        cd lam(re0 + a * dx, im0 + b * dy);
        for (int attempt = 0; attempt < 6; ++attempt) {
            const GapValue v = g.value(lam);
            if (!v.flagged && std::abs(v.gap) > tol.onLocus) break;
            lam += cd(0.37, 1.0) * (1e-7 * std::pow(10.0, attempt) * std::min(dx, dy));
        }
        Node& nd = nodes[id];
        nd.lambda = lam;
        nd.raw = g.raw(lam);
        nd.upper = g.upper_group(nd.raw);
    });
    auto node = [&](int a, int b) -> const Node& { return nodes[static_cast<std::size_t>(b * n + a)]; };

    // Edges: horizontal ids [0, H), vertical ids [H, 2H) with H = n (n - 1).
    const std::size_t H = static_cast<std::size_t>(n * (n - 1));
    std::vector<Crossing> crossings(2 * H);
    parallel_for(2 * H, jobs, [&](std::size_t e) {
        if (e < H) {
            const int b = static_cast<int>(e / static_cast<std::size_t>(n - 1)), a = static_cast<int>(e % static_cast<std::size_t>(n - 1));
            crossings[e] = bisect_edge(g, node(a, b), node(a + 1, b));
        } else {
            const std::size_t f = e - H;
            const int a = static_cast<int>(f / static_cast<std::size_t>(n - 1)), b = static_cast<int>(f % static_cast<std::size_t>(n - 1));
            crossings[e] = bisect_edge(g, node(a, b), node(a, b + 1));
        }
    });
    auto hEdge = [&](int a, int b) { return static_cast<std::size_t>(b * (n - 1) + a); };
    auto vEdge = [&](int a, int b) { return H + static_cast<std::size_t>(a * (n - 1) + b); };

    // Cell segments, sequential and in fixed order.
    std::map<std::size_t, std::vector<std::size_t>> adj;
    for (std::size_t e = 0; e < 2 * H; ++e)
        if (crossings[e].found) adj[e];
    auto link = [&](std::size_t p, std::size_t q) {
        adj[p].push_back(q);
        adj[q].push_back(p);
    };
    auto dist = [&](std::size_t p, std::size_t q) { return std::abs(crossings[p].lambda - crossings[q].lambda); };
    for (int b = 0; b + 1 < n; ++b)
        for (int a = 0; a + 1 < n; ++a) {
            const std::size_t ring[4] = {hEdge(a, b), vEdge(a + 1, b), hEdge(a, b + 1), vEdge(a, b)};
            std::vector<std::size_t> hit;
            for (std::size_t e : ring)
                if (crossings[e].found) hit.push_back(e);
            if (hit.size() == 2) {
                link(hit[0], hit[1]);
            } else if (hit.size() == 4) {
                const double d1 = dist(hit[0], hit[1]) + dist(hit[2], hit[3]);
                const double d2 = dist(hit[0], hit[3]) + dist(hit[1], hit[2]);
                if (d1 <= d2) {
                    link(hit[0], hit[1]);
                    link(hit[2], hit[3]);
                } else {
                    link(hit[0], hit[3]);
                    link(hit[1], hit[2]);
                }
            } else if (hit.size() == 3) {
                // A locus end lies in this cell; join the closest pair.
                const double d01 = dist(hit[0], hit[1]), d12 = dist(hit[1], hit[2]), d02 = dist(hit[0], hit[2]);
                if (d01 <= d12 && d01 <= d02) link(hit[0], hit[1]);
                else if (d12 <= d02) link(hit[1], hit[2]);
                else link(hit[0], hit[2]);
            }
        }

    // Chains: open ones from their lowest-id endpoint first, then cycles.
    std::vector<std::vector<std::size_t>> chains;
    std::vector<char> closedFlags;
    std::map<std::size_t, bool> seen;
    auto walk = [&](std::size_t start) {
        std::vector<std::size_t> chain{start};
        seen[start] = true;
        std::size_t prev = start, cur = start;
        bool closed = false;
        for (;;) {
            std::size_t next = static_cast<std::size_t>(-1);
            for (std::size_t q : adj[cur])
                if (!seen[q]) {
                    next = q;
                    break;
                }
            if (next == static_cast<std::size_t>(-1)) {
                for (std::size_t q : adj[cur])
                    if (q == start && cur != start && prev != start) closed = true;
                break;
            }
            seen[next] = true;
            chain.push_back(next);
            prev = cur;
            cur = next;
        }
        chains.push_back(std::move(chain));
        closedFlags.push_back(closed);
    };
    for (const auto& [e, nb] : adj)
        if (!seen[e] && nb.size() <= 1) walk(e);
    for (const auto& [e, nb] : adj)
        if (!seen[e]) walk(e);

    // Vertex data, evaluated in parallel over the flattened chain list.
    std::vector<std::size_t> flat;
    for (const auto& c : chains) flat.insert(flat.end(), c.begin(), c.end());
    std::vector<LocusVertex> data(flat.size());
    parallel_for(flat.size(), jobs, [&](std::size_t j) { data[j] = make_vertex(g, crossings[flat[j]].lambda); });

    SpectrumLocus locus;
    locus.side = g.side();
    locus.index = g.index();
    locus.resolution = n;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        Polyline current;
        current.closed = closedFlags[c];
        for (std::size_t j = 0; j < chains[c].size(); ++j, ++pos) {
            const LocusVertex& v = data[pos];
            if (domain.contains(v.lambda)) {
                current.vertices.push_back(v);
            } else if (!current.vertices.empty()) {
                current.closed = false;
                locus.polylines.push_back(std::move(current));
                current = Polyline{};
            }
        }
        if (!current.vertices.empty()) locus.polylines.push_back(std::move(current));
    }
    return locus;
}

DiskPartition::DiskPartition(const GapFunction& g, cd center, double radius, std::vector<cd> centerRaw,
                             std::pair<int, int> labels, SpectrumLocus arc)
    : g_(g), center_(center), radius_(radius), centerRaw_(std::move(centerRaw)), labels_(labels),
      arc_(std::move(arc)) {}

double DiskPartition::signed_gap(cd lambda) const {
    const std::vector<cd> c = g_.continue_raw(center_, lambda, centerRaw_);
    const double a = g_.real_exponent(c[static_cast<std::size_t>(labels_.first)]);
    if (labels_.second < 0) return a;
    return a - g_.real_exponent(c[static_cast<std::size_t>(labels_.second)]);
}

DiskRegion DiskPartition::classify(cd lambda) const {
    const double s = signed_gap(lambda);
    if (std::abs(s) <= g_.config().tol.onLocus) return DiskRegion::OnLocus;
    return s > 0.0 ? DiskRegion::B1 : DiskRegion::B2;
}

DiskPartition partition_disk(const GapFunction& g, cd center, double radius, int resolution) {
    const NondegeneracyReport rep = certify_nondegenerate(g, center);
    if (!rep.nondegenerate) {
        throw PreconditionError("partition_disk: the center is not a certified nondegenerate locus point");
    }
    const ParameterDomain disk = ParameterDomain::disk(center, radius, resolution);
    SpectrumLocus arc = trace_locus(g, disk);
    if (arc.polylines.size() != 1) {
        throw DiskTooLarge("partition_disk: the locus meets the disk in " + std::to_string(arc.polylines.size()) +
                           " arcs");
    }
    const double cell = std::sqrt(2.0) * 2.0 * radius / (resolution - 1);
    const auto& vs = arc.polylines.front().vertices;
    for (const LocusVertex* end : {&vs.front(), &vs.back()}) {
        if (std::abs(end->lambda - center) < radius - 2.0 * cell) {
            throw DiskTooLarge("partition_disk: the locus ends inside the disk near " +
                               std::to_string(end->lambda.real()) + (end->lambda.imag() < 0 ? "" : "+") +
                               std::to_string(end->lambda.imag()) + "i");
        }
    }
    for (const auto& v : vs)
        if (!v.nondegenerate) throw DiskTooLarge("partition_disk: a degenerate locus point lies inside the disk");
    std::vector<cd> raw = g.raw(center);
    const auto labels = g.pair_positions(raw);
    return DiskPartition(g, center, radius, std::move(raw), labels, std::move(arc));
}

} // namespace absspec
