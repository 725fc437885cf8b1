#include "fastexec/lob.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fastexec/errors.hpp"
#include "fastexec/rng.hpp"

namespace fastexec {

void LobSnapshot::validate() const {
    if (bids.empty()) throw DataError("LobSnapshot: at least one bid level required");
    if (bids.size() > 25 || asks.size() > 25)
        throw DataError("LobSnapshot: at most 25 levels per side");
    for (size_t i = 0; i < bids.size(); ++i) {
        if (!(bids[i].qty > 0.0)) throw DataError("LobSnapshot: bid quantities must be positive");
        if (i > 0 && !(bids[i].price < bids[i - 1].price))
            throw DataError("LobSnapshot: bid prices must be strictly decreasing");
    }
    for (size_t i = 0; i < asks.size(); ++i) {
        if (!(asks[i].qty > 0.0)) throw DataError("LobSnapshot: ask quantities must be positive");
        if (i > 0 && !(asks[i].price > asks[i - 1].price))
            throw DataError("LobSnapshot: ask prices must be strictly increasing");
    }
    if (!asks.empty() && !(bids.front().price < asks.front().price))
        throw DataError("LobSnapshot: best bid must be below best ask");
}

double LobSnapshot::total_bid_depth() const {
    double d = 0.0;
    for (const auto& l : bids) d += l.qty;
    return d;
}

ImpactCurve impact_curve(const LobSnapshot& book, const std::vector<double>& nu_grid) {
    book.validate();
    ImpactCurve curve;
    curve.ts_ms = book.ts_ms;
    curve.best_bid = book.best_bid();
    curve.v_min = book.bids.front().qty;
    curve.v_max = book.total_bid_depth();

    // cumulative depth / cost tables
    std::vector<double> depth(book.bids.size()), cost(book.bids.size());
    double d = 0.0, c = 0.0;
    for (size_t i = 0; i < book.bids.size(); ++i) {
        d += book.bids[i].qty;
        c += book.bids[i].price * book.bids[i].qty;
        depth[i] = d;
        cost[i] = c;
    }

    curve.points.reserve(nu_grid.size());
    for (double nu : nu_grid) {
        if (!(nu > 0.0)) throw DataError("impact_curve: nu must be positive");
        if (nu > curve.v_max * (1.0 + 1e-12))
            throw DataError("impact_curve: nu=" + std::to_string(nu) +
                            " exceeds displayed depth " + std::to_string(curve.v_max));
        const double nu_eff = std::min(nu, curve.v_max);
        const size_t lvl =
            std::lower_bound(depth.begin(), depth.end(), nu_eff) - depth.begin();
        const double prev_depth = lvl == 0 ? 0.0 : depth[lvl - 1];
        const double prev_cost = lvl == 0 ? 0.0 : cost[lvl - 1];
        const double take = nu_eff - prev_depth;
        const double vwap = (prev_cost + book.bids[lvl].price * take) / nu_eff;
        curve.points.push_back({nu, std::max(curve.best_bid - vwap, 0.0)});
    }
    return curve;
}

std::vector<double> default_nu_grid(const LobSnapshot& book, int interior_points) {
    std::vector<double> grid;
    double d = 0.0;
    for (const auto& l : book.bids) {
        d += l.qty;
        grid.push_back(d);
    }
    // Interior points sample where the book defines the curve shape, i.e.
    // past the first layer (impact is identically zero inside it).
    const double lo = grid.size() > 1 ? grid[1] : grid[0];
    const double v_max = d;
    if (interior_points > 0 && v_max > lo) {
        const double r = std::log(v_max / lo);
        for (int i = 1; i <= interior_points; ++i)
            grid.push_back(lo * std::exp(r * i / (interior_points + 1.0)));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
               grid.end());
    return grid;
}

std::vector<LobSnapshot> synth_lob(const std::vector<std::pair<int64_t, double>>& kappa_path,
                                   double phi,
                                   const std::vector<std::pair<int64_t, double>>& price_path,
                                   const SynthLobConfig& cfg) {
    if (kappa_path.size() != price_path.size())
        throw DataError("synth_lob: kappa and price paths must be time-aligned");
    if (!(phi > 0.0 && phi <= 1.0)) throw DataError("synth_lob: phi must lie in (0, 1]");
    if (cfg.levels < 2 || cfg.levels > 25) throw DataError("synth_lob: levels must be in [2, 25]");
    if (!(cfg.depth_min > 0.0 && cfg.depth_max > cfg.depth_min))
        throw DataError("synth_lob: need 0 < depth_min < depth_max");
    if (!(cfg.touch_depth > 0.0 && cfg.touch_depth <= cfg.depth_min * phi / (1.0 + phi)))
        throw DataError(
            "synth_lob: touch_depth must satisfy 0 < touch_depth <= depth_min * phi/(1+phi) "
            "(price monotonicity)");

    // zero-impact touch layer, then geometric power-law boundaries
    std::vector<double> bound(cfg.levels);
    bound[0] = cfg.touch_depth;
    const double ratio = std::log(cfg.depth_max / cfg.depth_min);
    for (int k = 1; k < cfg.levels; ++k)
        bound[k] = cfg.depth_min * std::exp(ratio * (k - 1) / (cfg.levels - 2.0));

    std::vector<LobSnapshot> books;
    books.reserve(kappa_path.size());
    for (size_t t = 0; t < kappa_path.size(); ++t) {
        if (kappa_path[t].first != price_path[t].first)
            throw DataError("synth_lob: timestamp mismatch between paths");
        const double S = price_path[t].second;
        double kappa = kappa_path[t].second;
        if (!(kappa > 0.0) || !(S > 0.0))
            throw DataError("synth_lob: kappa and price must be positive");

        PathRng rng(cfg.seed, static_cast<uint64_t>(t));
        if (cfg.kappa_noise > 0.0) kappa *= 1.0 + cfg.kappa_noise * rng.normal();
        if (!(kappa > 0.0)) kappa = kappa_path[t].second;  // keep jittered books valid

        LobSnapshot book;
        book.ts_ms = kappa_path[t].first;
        book.bids.resize(cfg.levels);
        book.bids[0] = {S, bound[0]};
        double prev_cost = S * bound[0];
        double prev_price = S;
        for (int k = 1; k < cfg.levels; ++k) {
            double target = kappa * std::pow(bound[k], 1.0 + phi);  // nu * I(nu) at boundary
            if (cfg.level_noise > 0.0) target *= 1.0 + cfg.level_noise * rng.normal();
            const double cum_cost = S * bound[k] - target;
            const double qty = bound[k] - bound[k - 1];
            double price = (cum_cost - prev_cost) / qty;
            if (!(price < prev_price)) price = prev_price - 1e-9 * S;  // monotone under jitter
            if (!(price > 0.0)) throw DataError("synth_lob: depth too shallow for kappa/price");
            book.bids[k] = {price, qty};
            prev_cost += price * qty;
            prev_price = price;
        }
        book.asks.resize(cfg.levels);
        for (int k = 0; k < cfg.levels; ++k)
            book.asks[k] = {2.0 * S + cfg.ask_spread - book.bids[k].price, book.bids[k].qty};
        book.validate();
        books.push_back(std::move(book));
    }
    return books;
}

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_lob_csv(const std::string& path, const std::vector<LobSnapshot>& books) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write LOB CSV: " + path);
    out << "ts_ms";
    for (int i = 1; i <= 25; ++i) out << ",bid_px_" << i;
    for (int i = 1; i <= 25; ++i) out << ",bid_qty_" << i;
    for (int i = 1; i <= 25; ++i) out << ",ask_px_" << i;
    for (int i = 1; i <= 25; ++i) out << ",ask_qty_" << i;
    out << "\n";
    for (const auto& b : books) {
        out << b.ts_ms;
        auto emit = [&](size_t n, auto get) {
            for (size_t i = 0; i < 25; ++i) {
                out << ',';
                if (i < n) out << format_double(get(i));
            }
        };
        emit(b.bids.size(), [&](size_t i) { return b.bids[i].price; });
        emit(b.bids.size(), [&](size_t i) { return b.bids[i].qty; });
        emit(b.asks.size(), [&](size_t i) { return b.asks[i].price; });
        emit(b.asks.size(), [&](size_t i) { return b.asks[i].qty; });
        out << "\n";
    }
}

std::vector<LobSnapshot> read_lob_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open LOB CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("LOB CSV is empty: " + path);

    std::vector<LobSnapshot> books;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        cells.reserve(101);
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 101) cells.emplace_back();
        if (cells.size() != 101)
            throw DataError("LOB CSV line " + std::to_string(lineno) + ": expected 101 columns, got " +
                            std::to_string(cells.size()));
        try {
            LobSnapshot book;
            book.ts_ms = std::stoll(cells[0]);
            auto grab = [&](int px_base, int qty_base, std::vector<LobLevel>& side) {
                for (int i = 0; i < 25; ++i) {
                    const std::string& px = cells[px_base + i];
                    const std::string& qty = cells[qty_base + i];
                    if (px.empty() || qty.empty()) break;
                    side.push_back({std::stod(px), std::stod(qty)});
                }
            };
            grab(1, 26, book.bids);
            grab(51, 76, book.asks);
            book.validate();
            books.push_back(std::move(book));
        } catch (const std::exception& e) {
            throw DataError("LOB CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return books;
}

}  // namespace fastexec
