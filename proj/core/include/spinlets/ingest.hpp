#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spinlets {

/// A planar point. Pitch units for soccer data.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// One spatially located interaction (a completed pass).
struct PrimitiveObject {
    Point2 origin;
    Point2 destination;
    std::size_t replicate_index = 0;
    friend bool operator==(const PrimitiveObject&, const PrimitiveObject&) = default;
};

/// One sampling unit: a response, an exposure window and the POs observed in it.
struct Replicate {
    std::string id;
    double response = 0.0;
    double exposure = 1.0;
    std::vector<std::size_t> po_indices;
    friend bool operator==(const Replicate&, const Replicate&) = default;
};

struct SpinDataset {
    std::vector<PrimitiveObject> pos;
    std::vector<Replicate> replicates;
    std::string label;

    std::size_t num_pos() const { return pos.size(); }
    std::size_t num_replicates() const { return replicates.size(); }

    /// Concatenated (origin, destination) 4-vectors in PO order.
    std::vector<std::array<double, 4>> feature_points() const;

    /// Throws ConsistencyError when a structural invariant is broken.
    void validate() const;

    friend bool operator==(const SpinDataset&, const SpinDataset&) = default;
};

/// Read the `replicate_id,y,t,x_origin,y_origin,x_dest,y_dest` format.
/// A row whose four coordinates are all blank declares a replicate without POs.
/// A blank `t` means exposure 1.
SpinDataset parse_spin_csv(const std::filesystem::path& path);
SpinDataset parse_spin_csv(std::istream& in, const std::string& label = {});

/// Inverse of parse_spin_csv; coordinates use shortest round-trip formatting.
void write_spin_csv(const SpinDataset& data, std::ostream& out);
void write_spin_csv(const SpinDataset& data, const std::filesystem::path& path);

/// A completed pass taken from an event feed.
struct PassRecord {
    std::string team;
    int minute = 0;
    int period = 1;
    Point2 location;
    Point2 end_location;
};

struct EventParseResult {
    std::vector<PassRecord> passes;
    /// Pass events without usable coordinates.
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
    /// Largest minute per period over every event in the file.
    std::map<int, int> max_minute_by_period;
};

/// Completed passes (type "Pass", no outcome) from one event-feed JSON array.
EventParseResult parse_event_json(const std::filesystem::path& path);
EventParseResult parse_event_text(const std::string& text);

/// Per-match input for replicate assembly.
struct MatchRecords {
    std::string match_id;
    std::string home_team;
    std::string away_team;
    std::optional<int> home_score;
    std::optional<int> away_score;
    std::vector<PassRecord> passes;
    /// Largest minute seen per period over all events of the match (both teams).
    /// When empty, derived from the pass minutes.
    std::map<int, int> max_minute_by_period;
};

enum class Task { goal_difference, game_phase };

Task parse_task(const std::string& name);
std::string to_string(Task task);

/// Minutes played in each period, from the largest observed minute per period.
/// Periods start at minutes 0, 45, 90, 105; penalty shoot-outs (period 5) are ignored.
std::map<int, double> period_lengths(const MatchRecords& match);

SpinDataset build_task_replicates(const std::vector<MatchRecords>& matches, Task task,
                                  int phase_cut_minute = 70);

/// Load a match list (array of match objects with match_id, home/away team and score)
/// and pair it with `<events_dir>/<match_id>.json`.
std::vector<MatchRecords> load_match_corpus(const std::filesystem::path& matches_json,
                                            const std::filesystem::path& events_dir,
                                            std::vector<std::string>* warnings = nullptr);

}  // namespace spinlets
