#include "spinlets/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "spinlets/error.hpp"

namespace spinlets {
namespace {

using nlohmann::json;

constexpr std::array<const char*, 7> kColumns = {"replicate_id", "y",      "t",     "x_origin",
                                                 "y_origin",     "x_dest", "y_dest"};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

double parse_number(std::string_view text, std::size_t row, const char* column) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("row " + std::to_string(row) + ": column '" + column +
                         "' is not a number: '" + std::string(text) + "'");
    if (!std::isfinite(value))
        throw ParseError("row " + std::to_string(row) + ": column '" + column +
                         "' is not finite");
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw InternalError("failed to format number");
    return std::string(buf, ptr);
}

std::string same_value_error(const std::string& id, const char* what) {
    return std::string("replicate '") + id + "' has inconsistent " + what + " across rows";
}

}  // namespace

std::vector<std::array<double, 4>> SpinDataset::feature_points() const {
    std::vector<std::array<double, 4>> out;
    out.reserve(pos.size());
    for (const auto& po : pos)
        out.push_back({po.origin.x, po.origin.y, po.destination.x, po.destination.y});
    return out;
}

void SpinDataset::validate() const {
    std::vector<int> owner(pos.size(), 0);
    for (std::size_t r = 0; r < replicates.size(); ++r) {
        const auto& rep = replicates[r];
        if (!(rep.exposure > 0.0) || !std::isfinite(rep.exposure))
            throw ConsistencyError("replicate '" + rep.id + "' has non-positive exposure");
        for (std::size_t idx : rep.po_indices) {
            if (idx >= pos.size())
                throw ConsistencyError("replicate '" + rep.id + "' references missing PO");
            if (pos[idx].replicate_index != r)
                throw ConsistencyError("PO " + std::to_string(idx) +
                                       " disagrees with its replicate");
            ++owner[idx];
        }
    }
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (owner[i] != 1)
            throw ConsistencyError("PO " + std::to_string(i) +
                                   " does not belong to exactly one replicate");
        const auto& p = pos[i];
        if (!std::isfinite(p.origin.x) || !std::isfinite(p.origin.y) ||
            !std::isfinite(p.destination.x) || !std::isfinite(p.destination.y))
            throw ConsistencyError("PO " + std::to_string(i) + " has a non-finite coordinate");
    }
}

SpinDataset parse_spin_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    return parse_spin_csv(in, path.stem().string());
}

SpinDataset parse_spin_csv(std::istream& in, const std::string& label) {
    SpinDataset data;
    data.label = label;

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    const auto header = split_commas(line);
    std::array<std::size_t, kColumns.size()> col{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), std::string_view(kColumns[c]));
        if (it == header.end())
            throw SchemaError(std::string("missing column '") + kColumns[c] + "'");
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::unordered_map<std::string, std::size_t> index_of;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        const std::string id(fields[col[0]]);
        if (id.empty()) throw ParseError("row " + std::to_string(row) + ": empty replicate_id");
        const double y = parse_number(fields[col[1]], row, "y");
        const double t = fields[col[2]].empty() ? 1.0 : parse_number(fields[col[2]], row, "t");
        if (!(t > 0.0))
            throw ParseError("row " + std::to_string(row) + ": exposure t must be positive");

        auto [it, inserted] = index_of.emplace(id, data.replicates.size());
        if (inserted) {
            data.replicates.push_back(Replicate{id, y, t, {}});
        } else {
            const auto& rep = data.replicates[it->second];
            if (rep.response != y) throw ConsistencyError(same_value_error(id, "y"));
            if (rep.exposure != t) throw ConsistencyError(same_value_error(id, "t"));
        }

        int blanks = 0;
        for (std::size_t c = 3; c < 7; ++c) blanks += fields[col[c]].empty() ? 1 : 0;
        if (blanks == 4) continue;
        if (blanks != 0)
            throw ParseError("row " + std::to_string(row) + ": partially blank coordinates");

        PrimitiveObject po;
        po.origin = {parse_number(fields[col[3]], row, kColumns[3]),
                     parse_number(fields[col[4]], row, kColumns[4])};
        po.destination = {parse_number(fields[col[5]], row, kColumns[5]),
                          parse_number(fields[col[6]], row, kColumns[6])};
        po.replicate_index = it->second;
        data.replicates[it->second].po_indices.push_back(data.pos.size());
        data.pos.push_back(po);
    }
    return data;
}

void write_spin_csv(const SpinDataset& data, std::ostream& out) {
    out << "replicate_id,y,t,x_origin,y_origin,x_dest,y_dest\n";
    for (const auto& rep : data.replicates) {
        if (rep.id.find_first_of(",\"\n\r") != std::string::npos)
            throw ArgumentError("replicate id '" + rep.id + "' contains a reserved character");
        const std::string prefix =
            rep.id + "," + format_double(rep.response) + "," + format_double(rep.exposure) + ",";
        if (rep.po_indices.empty()) {
            out << prefix << ",,,\n";
            continue;
        }
        for (std::size_t idx : rep.po_indices) {
            const auto& po = data.pos.at(idx);
            out << prefix << format_double(po.origin.x) << ',' << format_double(po.origin.y)
                << ',' << format_double(po.destination.x) << ','
                << format_double(po.destination.y) << '\n';
        }
    }
}

void write_spin_csv(const SpinDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    write_spin_csv(data, out);
}

// ---------------------------------------------------------------------------
// Event feed

namespace {

std::optional<Point2> read_point(const json& value) {
    if (!value.is_array() || value.size() < 2 || !value[0].is_number() || !value[1].is_number())
        return std::nullopt;
    Point2 p{value[0].get<double>(), value[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    return p;
}

std::string nested_name(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_object()) return {};
    auto name = it->find("name");
    if (name == it->end() || !name->is_string()) return {};
    return name->get<std::string>();
}

}  // namespace

EventParseResult parse_event_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed event JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("event JSON must be an array of event objects");

    EventParseResult result;
    for (std::size_t k = 0; k < doc.size(); ++k) {
        const json& ev = doc[k];
        if (!ev.is_object()) continue;
        const int period = ev.value("period", 1);
        const int minute = ev.value("minute", 0);
        auto& mx = result.max_minute_by_period[period];
        mx = std::max(mx, minute);

        if (nested_name(ev, "type") != "Pass") continue;
        auto pass = ev.find("pass");
        if (pass == ev.end() || !pass->is_object()) {
            ++result.skipped;
            result.warnings.push_back("event " + std::to_string(k) + ": pass object missing");
            continue;
        }
        if (pass->contains("outcome")) continue;

        const auto loc = ev.contains("location") ? read_point(ev["location"]) : std::nullopt;
        const auto end =
            pass->contains("end_location") ? read_point((*pass)["end_location"]) : std::nullopt;
        if (!loc || !end) {
            ++result.skipped;
            result.warnings.push_back("event " + std::to_string(k) +
                                      ": pass without location/end_location skipped");
            continue;
        }
        result.passes.push_back(PassRecord{nested_name(ev, "team"), minute, period, *loc, *end});
    }
    return result;
}

EventParseResult parse_event_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_event_text(buf.str());
}

Task parse_task(const std::string& name) {
    if (name == "goal_difference") return Task::goal_difference;
    if (name == "game_phase") return Task::game_phase;
    throw ArgumentError("unknown task '" + name + "' (expected goal_difference or game_phase)");
}

std::string to_string(Task task) {
    return task == Task::goal_difference ? "goal_difference" : "game_phase";
}

std::map<int, double> period_lengths(const MatchRecords& match) {
    static const std::map<int, int> kStart = {{1, 0}, {2, 45}, {3, 90}, {4, 105}};
    std::map<int, int> max_minute = match.max_minute_by_period;
    if (max_minute.empty())
        for (const auto& p : match.passes)
            max_minute[p.period] = std::max(max_minute[p.period], p.minute);

    std::map<int, double> lengths;
    for (const auto& [period, minute] : max_minute) {
        auto start = kStart.find(period);
        if (start == kStart.end()) continue;
        // Minutes are floor counters, so a half ending in minute 44 lasted 45 minutes.
        lengths[period] = std::max(0, minute + 1 - start->second);
    }
    return lengths;
}

SpinDataset build_task_replicates(const std::vector<MatchRecords>& matches, Task task,
                                  int phase_cut_minute) {
    if (task == Task::game_phase && (phase_cut_minute <= 0 || phase_cut_minute >= 120))
        throw ArgumentError("phase_cut_minute must lie in (0, 120)");

    static const std::map<int, int> kStart = {{1, 0}, {2, 45}, {3, 90}, {4, 105}};
    SpinDataset data;
    data.label = to_string(task);

    for (const auto& match : matches) {
        if (task == Task::goal_difference && (!match.home_score || !match.away_score))
            throw ArgumentError("match '" + match.match_id + "' has no score metadata");

        const auto lengths = period_lengths(match);
        double total = 0.0;
        double before_cut = 0.0;
        for (const auto& [period, len] : lengths) {
            const double start = kStart.at(period);
            total += len;
            before_cut += std::clamp(phase_cut_minute - start, 0.0, len);
        }
        if (!(total > 0.0)) total = 90.0;

        const std::array<std::string, 2> teams = {match.home_team, match.away_team};
        for (std::size_t side = 0; side < 2; ++side) {
            const std::string& team = teams[side];
            const auto base = data.replicates.size();
            if (task == Task::goal_difference) {
                const int scored = side == 0 ? *match.home_score : *match.away_score;
                const int conceded = side == 0 ? *match.away_score : *match.home_score;
                data.replicates.push_back(Replicate{match.match_id + ":" + team,
                                                    double(scored - conceded), total / 90.0, {}});
            } else {
                const double after_cut = total - before_cut;
                if (!(before_cut > 0.0) || !(after_cut > 0.0))
                    throw ArgumentError("match '" + match.match_id +
                                        "' has an empty game phase at the cut minute");
                data.replicates.push_back(
                    Replicate{match.match_id + ":" + team + ":early", 0.0, before_cut / 90.0, {}});
                data.replicates.push_back(
                    Replicate{match.match_id + ":" + team + ":late", 1.0, after_cut / 90.0, {}});
            }
            for (const auto& pass : match.passes) {
                if (pass.team != team) continue;
                std::size_t r = base;
                if (task == Task::game_phase && pass.minute >= phase_cut_minute) r = base + 1;
                data.replicates[r].po_indices.push_back(data.pos.size());
                data.pos.push_back(PrimitiveObject{pass.location, pass.end_location, r});
            }
        }
    }
    // Keep POs grouped by replicate so the CSV form round-trips.
    std::vector<PrimitiveObject> ordered;
    ordered.reserve(data.pos.size());
    for (auto& rep : data.replicates) {
        for (auto& idx : rep.po_indices) {
            ordered.push_back(data.pos[idx]);
            idx = ordered.size() - 1;
        }
    }
    data.pos = std::move(ordered);
    return data;
}

std::vector<MatchRecords> load_match_corpus(const std::filesystem::path& matches_json,
                                            const std::filesystem::path& events_dir,
                                            std::vector<std::string>* warnings) {
    std::ifstream in(matches_json);
    if (!in) throw ArgumentError("cannot open " + matches_json.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed match JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("match JSON must be an array");

    std::vector<MatchRecords> out;
    for (const auto& m : doc) {
        MatchRecords rec;
        const auto& id = m.at("match_id");
        rec.match_id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
        const auto& home = m.at("home_team");
        const auto& away = m.at("away_team");
        rec.home_team = home.is_string() ? home.get<std::string>()
                                         : home.value("home_team_name", std::string{});
        rec.away_team = away.is_string() ? away.get<std::string>()
                                         : away.value("away_team_name", std::string{});
        if (m.contains("home_score") && m["home_score"].is_number_integer())
            rec.home_score = m["home_score"].get<int>();
        if (m.contains("away_score") && m["away_score"].is_number_integer())
            rec.away_score = m["away_score"].get<int>();

        auto events = parse_event_json(events_dir / (rec.match_id + ".json"));
        if (warnings && events.skipped > 0)
            warnings->push_back("match " + rec.match_id + ": skipped " +
                                std::to_string(events.skipped) + " pass events");
        rec.passes = std::move(events.passes);
        rec.max_minute_by_period = std::move(events.max_minute_by_period);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace spinlets
