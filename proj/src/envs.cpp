#include "hsprobe/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "hsprobe/rng.hpp"

namespace hsprobe {

std::string to_string(EnvKind kind)
{
    return kind == EnvKind::pixel_grid ? "pixelgrid" : "minipong";
}

EnvKind env_kind_from_string(const std::string& s)
{
    if (s == "pixelgrid") return EnvKind::pixel_grid;
    if (s == "minipong") return EnvKind::mini_pong;
    throw std::invalid_argument("unknown environment id '" + s + "'");
}

void EnvSpec::validate() const
{
    if (rows < 2 || cols < 2) throw std::invalid_argument("environment board must be at least 2x2");
    if (cell_pixels < 1) throw std::invalid_argument("cell_pixels must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (episode_cap < 1) throw std::invalid_argument("episode cap must be >= 1");
    if (!(score_min < score_max)) throw std::invalid_argument("score bounds need min < max");
    if (kind == EnvKind::pixel_grid) {
        if (action_count != 4) throw std::invalid_argument("pixelgrid has exactly 4 actions");
        if (!(wall_density >= 0.0 && wall_density < 1.0)) throw std::invalid_argument("wall_density must lie in [0, 1)");
    } else {
        if (action_count != 3) throw std::invalid_argument("minipong has exactly 3 actions");
        if (rows < 6 || cols < 4) throw std::invalid_argument("minipong board must be at least 6x4");
    }
}

EnvSpec pixel_grid_spec(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    EnvSpec s;
    s.kind = EnvKind::pixel_grid;
    s.rows = rows;
    s.cols = cols;
    s.cell_pixels = 3;
    s.action_count = 4;
    s.episode_cap = 200;
    s.score_min = PixelGrid::kStepPenalty * 200;
    s.score_max = PixelGrid::kGoalReward;
    s.seed = seed;
    return s;
}

EnvSpec mini_pong_spec(std::uint64_t seed)
{
    EnvSpec s;
    s.kind = EnvKind::mini_pong;
    s.rows = 16;
    s.cols = 12;
    s.cell_pixels = 2;
    s.action_count = 3;
    s.episode_cap = 1000;
    s.score_min = -MiniPong::kWinningScore;
    s.score_max = MiniPong::kWinningScore;
    s.seed = seed;
    return s;
}

void Environment::check_step(std::size_t action) const
{
    if (done_) throw EnvError("step called on a finished episode; call reset first");
    if (action >= spec_.action_count)
        throw EnvError("action " + std::to_string(action) + " out of range (|A| = " +
                       std::to_string(spec_.action_count) + ")");
}

std::unique_ptr<Environment> make_env(const EnvSpec& spec)
{
    if (spec.kind == EnvKind::pixel_grid) return std::make_unique<PixelGrid>(spec);
    return std::make_unique<MiniPong>(spec);
}

// ---------------------------------------------------------------------------
// PixelGrid

namespace {

constexpr int kMoveRow[4] = {-1, 1, 0, 0};
constexpr int kMoveCol[4] = {0, 0, -1, 1};

std::vector<long> bfs_distances(const GridLayout& layout, Cell from)
{
    std::vector<long> dist(layout.rows * layout.cols, -1);
    std::deque<Cell> queue{from};
    dist[from.row * layout.cols + from.col] = 0;
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        for (int a = 0; a < 4; ++a) {
            const long r = static_cast<long>(c.row) + kMoveRow[a], k = static_cast<long>(c.col) + kMoveCol[a];
            if (r < 0 || k < 0 || r >= static_cast<long>(layout.rows) || k >= static_cast<long>(layout.cols)) continue;
            const Cell n{static_cast<std::size_t>(r), static_cast<std::size_t>(k)};
            if (layout.wall(n) || dist[n.row * layout.cols + n.col] >= 0) continue;
            dist[n.row * layout.cols + n.col] = dist[c.row * layout.cols + c.col] + 1;
            queue.push_back(n);
        }
    }
    return dist;
}

void fill_block(Observation& obs, std::size_t cell_pixels, std::size_t row, std::size_t col, double value)
{
    for (std::size_t i = 0; i < cell_pixels; ++i)
        for (std::size_t j = 0; j < cell_pixels; ++j) obs.at(row * cell_pixels + i, col * cell_pixels + j) = value;
}

}  // namespace

std::vector<Cell> GridLayout::start_cells() const
{
    const auto dist = bfs_distances(*this, goal);
    std::vector<Cell> out;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (dist[r * cols + c] > 0) out.push_back({r, c});
    return out;
}

GridLayout generate_layout(const EnvSpec& spec)
{
    spec.validate();
    Rng rng(derive_seed(spec.seed, 0x6c61796f7574ULL));
    GridLayout layout;
    layout.rows = spec.rows;
    layout.cols = spec.cols;
    layout.walls.assign(spec.rows * spec.cols, false);
    const std::size_t g = rng.index(spec.rows * spec.cols);
    layout.goal = {g / spec.cols, g % spec.cols};
    for (std::size_t i = 0; i < layout.walls.size(); ++i)
        layout.walls[i] = i != g && rng.uniform() < spec.wall_density;
    const auto dist = bfs_distances(layout, layout.goal);
    for (std::size_t i = 0; i < layout.walls.size(); ++i)
        if (dist[i] < 0) layout.walls[i] = true;
    if (layout.start_cells().empty()) throw std::invalid_argument("generated layout has no start cells");
    return layout;
}

PixelGrid::PixelGrid(EnvSpec spec) : PixelGrid(spec, generate_layout(spec)) {}

PixelGrid::PixelGrid(EnvSpec spec, GridLayout layout) : Environment(std::move(spec)), layout_(std::move(layout))
{
    spec_.validate();
    if (spec_.kind != EnvKind::pixel_grid) throw std::invalid_argument("PixelGrid needs a pixelgrid spec");
    if (layout_.rows != spec_.rows || layout_.cols != spec_.cols || layout_.walls.size() != spec_.rows * spec_.cols)
        throw std::invalid_argument("layout dimensions do not match spec");
    if (layout_.wall(layout_.goal)) throw std::invalid_argument("goal cell is a wall");
}

Cell PixelGrid::start_for(std::uint64_t episode_seed) const
{
    const auto starts = layout_.start_cells();
    Rng rng(derive_seed(spec_.seed ^ 0x7374617274ULL, episode_seed));
    return starts[rng.index(starts.size())];
}

Observation PixelGrid::reset(std::uint64_t episode_seed)
{
    return reset_at(start_for(episode_seed));
}

Observation PixelGrid::reset_at(Cell start)
{
    if (start.row >= spec_.rows || start.col >= spec_.cols || layout_.wall(start) || start == layout_.goal)
        throw std::invalid_argument("invalid start cell");
    agent_ = start;
    t_ = 0;
    done_ = false;
    return render();
}

StepResult PixelGrid::step(std::size_t action)
{
    check_step(action);
    const long r = static_cast<long>(agent_.row) + kMoveRow[action];
    const long c = static_cast<long>(agent_.col) + kMoveCol[action];
    if (r >= 0 && c >= 0 && r < static_cast<long>(spec_.rows) && c < static_cast<long>(spec_.cols)) {
        const Cell next{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
        if (!layout_.wall(next)) agent_ = next;
    }
    ++t_;
    StepResult out;
    out.step_index = t_;
    if (agent_ == layout_.goal) {
        out.reward = kGoalReward;
        out.terminal = true;
    } else {
        out.reward = kStepPenalty;
        if (t_ >= spec_.episode_cap) out.terminal = out.truncated = true;
    }
    done_ = out.terminal;
    out.observation = render();
    return out;
}

Observation PixelGrid::render() const
{
    const auto shape = spec_.observation_shape();
    Observation obs(shape[0], shape[1], 1);
    for (std::size_t r = 0; r < spec_.rows; ++r)
        for (std::size_t c = 0; c < spec_.cols; ++c)
            if (layout_.wall({r, c})) fill_block(obs, spec_.cell_pixels, r, c, kWallPixel);
    fill_block(obs, spec_.cell_pixels, layout_.goal.row, layout_.goal.col, kGoalPixel);
    fill_block(obs, spec_.cell_pixels, agent_.row, agent_.col, kAgentPixel);
    return obs;
}

std::optional<std::size_t> shortest_path_length(const GridLayout& layout, Cell start)
{
    const auto dist = bfs_distances(layout, start);
    const long d = dist[layout.goal.row * layout.cols + layout.goal.col];
    if (d < 0) return std::nullopt;
    return static_cast<std::size_t>(d);
}

double oracle_return(const GridLayout& layout, Cell start)
{
    const auto d = shortest_path_length(layout, start);
    if (!d) throw std::invalid_argument("goal unreachable from start");
    return PixelGrid::kGoalReward + PixelGrid::kStepPenalty * static_cast<double>(*d - 1);
}

double oracle_return(const EnvSpec& spec, std::uint64_t episode_seed)
{
    if (spec.kind != EnvKind::pixel_grid) throw std::invalid_argument("oracle_return supports pixelgrid only");
    const PixelGrid env(spec);
    return oracle_return(env.layout(), env.start_for(episode_seed));
}

// ---------------------------------------------------------------------------
// MiniPong

MiniPong::MiniPong(EnvSpec spec) : Environment(std::move(spec))
{
    spec_.validate();
    if (spec_.kind != EnvKind::mini_pong) throw std::invalid_argument("MiniPong needs a minipong spec");
}

void MiniPong::serve(int row_direction)
{
    ball_row_ = static_cast<long>(spec_.rows / 2);
    ball_col_ = static_cast<long>(spec_.cols / 2);
    own_ = opp_ = ball_col_;
    drow_ = row_direction;
    dcol_ = serve_col_direction_;
    serve_col_direction_ = -serve_col_direction_;
}

Observation MiniPong::reset(std::uint64_t episode_seed)
{
    Rng rng(derive_seed(spec_.seed ^ 0x706f6e67ULL, episode_seed));
    const int drow = rng.index(2) ? 1 : -1;
    serve_col_direction_ = rng.index(2) ? 1 : -1;
    score_ = 0;
    t_ = 0;
    done_ = false;
    serve(drow);
    return render();
}

StepResult MiniPong::step(std::size_t action)
{
    check_step(action);
    const long cols = static_cast<long>(spec_.cols), rows = static_cast<long>(spec_.rows);
    auto clamp_paddle = [cols](long x) { return std::clamp(x, 1L, cols - 2); };
    if (action == 1) own_ = clamp_paddle(own_ - 1);
    if (action == 2) own_ = clamp_paddle(own_ + 1);
    if (t_ % 2 == 0) {
        if (opp_ < ball_col_) opp_ = clamp_paddle(opp_ + 1);
        else if (opp_ > ball_col_) opp_ = clamp_paddle(opp_ - 1);
    }

    long nc = ball_col_ + dcol_;
    if (nc < 0 || nc > cols - 1) {
        dcol_ = -dcol_;
        nc = ball_col_ + dcol_;
    }
    double reward = 0.0;
    if (drow_ == 1 && ball_row_ == rows - 2) {
        if (std::labs(nc - own_) <= 1) {
            drow_ = -1;
            ball_row_ -= 1;
            ball_col_ = nc;
        } else {
            reward = -1.0;
            --score_;
            serve(-1);
        }
    } else if (drow_ == -1 && ball_row_ == 1) {
        if (std::labs(nc - opp_) <= 1) {
            drow_ = 1;
            ball_row_ += 1;
            ball_col_ = nc;
        } else {
            reward = 1.0;
            ++score_;
            serve(1);
        }
    } else {
        ball_row_ += drow_;
        ball_col_ = nc;
    }

    ++t_;
    StepResult out;
    out.reward = reward;
    out.step_index = t_;
    if (std::abs(score_) >= kWinningScore) out.terminal = true;
    else if (t_ >= spec_.episode_cap) out.terminal = out.truncated = true;
    done_ = out.terminal;
    out.observation = render();
    return out;
}

Observation MiniPong::render() const
{
    const auto shape = spec_.observation_shape();
    Observation obs(shape[0], shape[1], 1);
    const std::size_t px = spec_.cell_pixels;
    for (long d = -1; d <= 1; ++d) {
        fill_block(obs, px, 0, static_cast<std::size_t>(opp_ + d), kPaddlePixel);
        fill_block(obs, px, spec_.rows - 1, static_cast<std::size_t>(own_ + d), kPaddlePixel);
    }
    fill_block(obs, px, static_cast<std::size_t>(ball_row_), static_cast<std::size_t>(ball_col_), kBallPixel);
    return obs;
}

}  // namespace hsprobe
