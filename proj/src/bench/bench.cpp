#include "cexrepair/bench/bench.hpp"

#include "cexrepair/common/errors.hpp"
#include "cexrepair/common/util.hpp"
#include "cexrepair/source/tokens.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace cexrepair::bench {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::TaskInput;

Dataset load_dataset(const fs::path &dir)
{
    if (!fs::is_directory(dir))
        throw DatasetNotFound("dataset directory not found: " + dir.string());
    Dataset d;
    std::vector<fs::path> subdirs;
    for (auto &e : fs::directory_iterator(dir))
        if (e.is_directory())
            subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    for (auto &p : subdirs) {
        try {
            auto t = pipeline::load_task(p);
            source::parse_proof(t.unverified_source);
            d.tasks.push_back(std::move(t));
        } catch (const Error &e) {
            d.warnings.push_back("skipping " + p.filename().string() + ": " + e.what());
        }
    }
    std::stable_sort(d.tasks.begin(), d.tasks.end(),
                     [](const TaskInput &a, const TaskInput &b) { return a.task_id < b.task_id; });
    return d;
}

void write_task(const fs::path &dir, const TaskInput &task)
{
    fs::path d = dir / task.task_id;
    fs::create_directories(d);
    write_file(d / "unverified.rs", task.unverified_source);
    if (task.ground_truth_source)
        write_file(d / "verified.rs", *task.ground_truth_source);
    json meta = task.meta.is_object() ? task.meta : json::object();
    meta["task_id"] = task.task_id;
    write_file(d / "meta.json", meta.dump(2) + "\n");
}

std::string format_ratio(long long num, long long den, int decimals)
{
    if (den <= 0)
        return "—";
    bool neg = num < 0;
    BigInt n = neg ? BigInt(-num) : BigInt(num);
    BigInt scale = 1;
    for (int i = 0; i < decimals; ++i)
        scale *= 10;
    BigInt q = (2 * n * scale + den) / (2 * BigInt(den));
    BigInt whole = q / scale, frac = q % scale;
    std::string f = to_string(frac);
    while (static_cast<int>(f.size()) < decimals)
        f = "0" + f;
    std::string out = (neg && q != 0 ? "-" : "") + to_string(whole);
    if (decimals > 0)
        out += "." + f;
    return out;
}

std::string format_fixed(std::optional<double> v, int decimals)
{
    if (!v)
        return "—";
    double scale = std::pow(10.0, decimals);
    double x = std::floor(std::fabs(*v) * scale + 0.5 + 1e-9) / scale;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.*f", *v < 0 && x != 0 ? "-" : "", decimals, x);
    return buf;
}

std::optional<double> success_rate(std::size_t passes, std::size_t total)
{
    if (total == 0)
        return std::nullopt;
    return std::stod(format_ratio(static_cast<long long>(100 * passes), static_cast<long long>(total), 1));
}

TaskRow row_from_trace(const pipeline::RepairTrace &t, const llm::Prices &prices)
{
    TaskRow r;
    r.task_id = t.task_id;
    r.status = pipeline::final_status_name(t.final_status);
    r.tokens_in = t.ledger.input_tokens;
    r.tokens_out = t.ledger.output_tokens;
    r.cost_usd = llm::cost_of({r.tokens_in, r.tokens_out}, prices);
    r.wall_time = t.wall_time;
    r.iterations_used = static_cast<int>(t.iterations.size());
    r.phase = pipeline::phase_name(t.phase);
    return r;
}

Aggregates compute_aggregates(const std::vector<TaskRow> &rows, const llm::Prices &prices)
{
    Aggregates a;
    a.total = rows.size();
    if (rows.empty())
        return a;
    long long in = 0, out = 0;
    double time = 0;
    for (auto &r : rows) {
        a.passes += r.status == "Pass";
        in += r.tokens_in;
        out += r.tokens_out;
        time += r.wall_time;
    }
    auto n = static_cast<long long>(rows.size());
    a.success_rate = success_rate(a.passes, a.total);
    a.mean_tokens_in_k = std::stod(format_ratio(in, n * 1000, 1));
    a.mean_tokens_out_k = std::stod(format_ratio(out, n * 1000, 1));
    a.mean_cost_usd = llm::cost_of({in, out}, prices) / static_cast<double>(n);
    a.mean_wall_time = std::stod(format_fixed(time / static_cast<double>(n), 1));
    return a;
}

Aggregates compute_metrics(const std::vector<pipeline::RepairTrace> &traces, const llm::Prices &prices)
{
    std::vector<TaskRow> rows;
    for (auto &t : traces)
        rows.push_back(row_from_trace(t, prices));
    return compute_aggregates(rows, prices);
}

std::string cost_row(const Aggregates &a)
{
    if (a.total == 0)
        return "—";
    return format_fixed(a.mean_tokens_in_k, 1) + "/" + format_fixed(a.mean_tokens_out_k, 1) + ", " +
           format_fixed(a.mean_cost_usd, 2);
}

BenchReport run_bench(const std::vector<TaskInput> &tasks, const TaskRunner &runner, const BenchOptions &options)
{
    if (options.parallelism < 1)
        throw ConfigError("parallelism must be at least 1");
    std::vector<TaskRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
            const auto &task = tasks[i];
            fs::path ws = options.workspace / task.task_id;
            try {
                auto trace = runner(task, ws);
                rows[i] = row_from_trace(trace, options.prices);
                if (options.traces_dir) {
                    std::lock_guard lk(io);
                    fs::create_directories(*options.traces_dir);
                    write_file(*options.traces_dir / (task.task_id + ".json"),
                               pipeline::trace_to_json(trace).dump(2) + "\n");
                }
            } catch (const std::exception &e) {
                rows[i].task_id = task.task_id;
                rows[i].status = "Error";
                rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(options.parallelism, std::max<int>(1, static_cast<int>(tasks.size())));
    for (int k = 0; k < n; ++k)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();
    std::stable_sort(rows.begin(), rows.end(), [](const TaskRow &a, const TaskRow &b) { return a.task_id < b.task_id; });
    BenchReport r;
    r.per_task = std::move(rows);
    r.aggregates = compute_aggregates(r.per_task, options.prices);
    r.config = options.config;
    return r;
}

namespace {

json opt(std::optional<double> v)
{
    return v ? json(*v) : json(nullptr);
}

json payload(const BenchReport &r, bool with_time)
{
    json rows = json::array();
    for (auto &t : r.per_task) {
        json j = {{"task_id", t.task_id},
                  {"status", t.status},
                  {"tokens_in", t.tokens_in},
                  {"tokens_out", t.tokens_out},
                  {"cost_usd", t.cost_usd},
                  {"iterations_used", t.iterations_used},
                  {"phase", t.phase},
                  {"error", t.error}};
        if (with_time)
            j["wall_time"] = t.wall_time;
        rows.push_back(std::move(j));
    }
    auto &a = r.aggregates;
    json agg = {{"total", a.total},
                {"passes", a.passes},
                {"success_rate", opt(a.success_rate)},
                {"success_rate_text", format_fixed(a.success_rate, 1)},
                {"mean_tokens_in_k", opt(a.mean_tokens_in_k)},
                {"mean_tokens_out_k", opt(a.mean_tokens_out_k)},
                {"mean_cost_usd", opt(a.mean_cost_usd)},
                {"cost_row", cost_row(a)}};
    if (with_time)
        agg["mean_wall_time"] = opt(a.mean_wall_time);
    return {{"per_task", rows}, {"aggregates", agg}, {"config", r.config}};
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    return "\"" + replace_all(s, "\"", "\"\"") + "\"";
}

} // namespace

json report_to_json(const BenchReport &r) { return payload(r, true); }
json comparable_payload(const BenchReport &r) { return payload(r, false); }

std::string report_to_csv(const BenchReport &r)
{
    std::string out = "task_id,status,tokens_in,tokens_out,cost_usd,wall_time,iterations_used\n";
    for (auto &t : r.per_task)
        out += csv_field(t.task_id) + "," + t.status + "," + std::to_string(t.tokens_in) + "," +
               std::to_string(t.tokens_out) + "," + format_fixed(t.cost_usd, 4) + "," + format_fixed(t.wall_time, 1) +
               "," + std::to_string(t.iterations_used) + "\n";
    return out;
}

std::string summary_csv(const BenchReport &r, const std::string &method)
{
    auto &a = r.aggregates;
    std::string tokens = a.total ? format_fixed(a.mean_tokens_in_k, 1) + "/" + format_fixed(a.mean_tokens_out_k, 1)
                                 : std::string("—");
    return "method,tasks,passes,success_rate,tokens_k,cost_usd,time_s\n" + csv_field(method) + "," +
           std::to_string(a.total) + "," + std::to_string(a.passes) + "," + format_fixed(a.success_rate, 1) + "," +
           tokens + "," + format_fixed(a.mean_cost_usd, 2) + "," + format_fixed(a.mean_wall_time, 1) + "\n";
}

} // namespace cexrepair::bench
