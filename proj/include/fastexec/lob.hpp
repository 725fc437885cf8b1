#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fastexec {

struct LobLevel {
    double price = 0.0;
    double qty = 0.0;
};

/// One timestamped level-2 book side pair, up to 25 levels each. Bid prices
/// strictly decreasing, ask prices strictly increasing, quantities positive.
struct LobSnapshot {
    int64_t ts_ms = 0;
    std::vector<LobLevel> bids;
    std::vector<LobLevel> asks;

    void validate() const;
    double best_bid() const { return bids.front().price; }
    double total_bid_depth() const;
};

struct ImpactPoint {
    double nu = 0.0;
    double impact = 0.0;
};

/// Virtual-trade impact curve nu -> I(nu) = best_bid - VWAP(nu) for sell
/// volumes walked through the bid side.
struct ImpactCurve {
    int64_t ts_ms = 0;
    double best_bid = 0.0;
    double v_min = 0.0;  ///< first-layer depth: inf{nu : I(nu) > 0}
    double v_max = 0.0;  ///< total displayed bid depth
    std::vector<ImpactPoint> points;
};

ImpactCurve impact_curve(const LobSnapshot& book, const std::vector<double>& nu_grid);

/// Cumulative depth boundaries plus log-spaced interior points in
/// [v_min, v_max]; where the book actually defines the curve shape.
std::vector<double> default_nu_grid(const LobSnapshot& book, int interior_points = 32);

/// Synthetic book generator: builds snapshots whose cumulative-depth VWAP
/// reproduces I(nu) = kappa_t nu^phi at every layer boundary past the first.
/// The first layer executes at the touch (impact zero), as on a real book;
/// it must be much shallower than the first matched boundary or the level
/// prices would fail to decrease (nu I(nu) must stay convex).
struct SynthLobConfig {
    int levels = 25;
    double touch_depth = 0.002;  ///< depth of the zero-impact first layer
    double depth_min = 0.1;      ///< first power-law-matched boundary
    double depth_max = 2.4;      ///< total displayed depth
    double ask_spread = 0.01;
    double kappa_noise = 0.0;    ///< per-snapshot multiplicative jitter on kappa
    double level_noise = 0.0;    ///< per-level multiplicative jitter on impact increments
    uint64_t seed = 0;
};

std::vector<LobSnapshot> synth_lob(const std::vector<std::pair<int64_t, double>>& kappa_path,
                                   double phi,
                                   const std::vector<std::pair<int64_t, double>>& price_path,
                                   const SynthLobConfig& cfg = {});

/// CSV with header ts_ms,bid_px_1..bid_px_25,bid_qty_1..bid_qty_25,
/// ask_px_1..ask_px_25,ask_qty_1..ask_qty_25; empty levels blank.
void write_lob_csv(const std::string& path, const std::vector<LobSnapshot>& books);
std::vector<LobSnapshot> read_lob_csv(const std::string& path);

}  // namespace fastexec
