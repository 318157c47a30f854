#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsprobe/observation.hpp"

namespace hsprobe {

enum class EnvKind { pixel_grid, mini_pong };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& s);

/// Static description of a desk-scale MDP.
struct EnvSpec {
    EnvKind kind = EnvKind::pixel_grid;
    std::size_t rows = 8;
    std::size_t cols = 8;
    std::size_t cell_pixels = 3;
    std::size_t action_count = 4;
    double gamma = 0.99;
    std::size_t episode_cap = 200;
    double score_min = -2.0;
    double score_max = 1.0;
    std::uint64_t seed = 0;
    /// PixelGrid only: fraction of cells turned into walls.
    double wall_density = 0.15;

    Shape observation_shape() const { return {rows * cell_pixels, cols * cell_pixels, 1}; }
    void validate() const;

    friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

/// Defaults: PixelGrid rows x cols, 3-pixel cells, cap 200, bounds [-2, 1].
EnvSpec pixel_grid_spec(std::size_t rows, std::size_t cols, std::uint64_t seed);
/// Defaults: 16 x 12 board, 2-pixel cells, cap 1000, bounds [-5, 5].
EnvSpec mini_pong_spec(std::uint64_t seed);

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool terminal = false;
    /// Terminal because the episode cap was hit rather than a true end state.
    bool truncated = false;
    std::size_t step_index = 0;
};

class EnvError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual Observation reset(std::uint64_t episode_seed) = 0;
    /// Throws EnvError on an out-of-range action or when called after a
    /// terminal step without reset.
    virtual StepResult step(std::size_t action) = 0;
    virtual Observation render() const = 0;

    const EnvSpec& spec() const noexcept { return spec_; }

protected:
    explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
    void check_step(std::size_t action) const;

    EnvSpec spec_;
    std::size_t t_ = 0;
    bool done_ = true;
};

std::unique_ptr<Environment> make_env(const EnvSpec& spec);

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Walls and goal of a PixelGrid board.
struct GridLayout {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<bool> walls;  // row-major
    Cell goal;

    bool wall(Cell c) const { return walls[c.row * cols + c.col]; }
    /// Floor cells that can reach the goal, excluding the goal itself.
    std::vector<Cell> start_cells() const;
};

/// Seeded layout: random goal and walls, with cells cut off from the goal
/// turned into walls so every start is solvable.
GridLayout generate_layout(const EnvSpec& spec);

/// Grid navigation. Actions: 0 up, 1 down, 2 left, 3 right. Reaching the
/// goal pays +1 and ends the episode; every other step pays -0.01.
/// Rendering: 3x3 pixel blocks, agent 255, goal 170, wall 85, floor 0.
class PixelGrid final : public Environment {
public:
    static constexpr double kGoalReward = 1.0;
    static constexpr double kStepPenalty = -0.01;
    static constexpr double kAgentPixel = 255.0;
    static constexpr double kGoalPixel = 170.0;
    static constexpr double kWallPixel = 85.0;

    explicit PixelGrid(EnvSpec spec);
    PixelGrid(EnvSpec spec, GridLayout layout);

    Observation reset(std::uint64_t episode_seed) override;
    Observation reset_at(Cell start);
    StepResult step(std::size_t action) override;
    Observation render() const override;

    const GridLayout& layout() const noexcept { return layout_; }
    Cell agent() const noexcept { return agent_; }
    Cell start_for(std::uint64_t episode_seed) const;

private:
    GridLayout layout_;
    Cell agent_;
};

/// Shortest-path length (moves) from `start` to the goal; nullopt if unreachable.
std::optional<std::size_t> shortest_path_length(const GridLayout& layout, Cell start);

/// Optimal undiscounted return 1 - 0.01 * (d - 1) for shortest path length d.
double oracle_return(const EnvSpec& spec, std::uint64_t episode_seed);
double oracle_return(const GridLayout& layout, Cell start);

/// Paddle-ball. The agent's paddle is on the bottom row, a half-speed
/// scripted opponent on the top row. Actions: 0 stay, 1 left, 2 right.
/// +1 when the opponent misses, -1 when the agent misses; the episode ends
/// at |score| = 5 or at the step cap.
class MiniPong final : public Environment {
public:
    static constexpr int kWinningScore = 5;
    static constexpr double kBallPixel = 255.0;
    static constexpr double kPaddlePixel = 170.0;

    explicit MiniPong(EnvSpec spec);

    Observation reset(std::uint64_t episode_seed) override;
    StepResult step(std::size_t action) override;
    Observation render() const override;

    Cell ball() const noexcept { return {static_cast<std::size_t>(ball_row_), static_cast<std::size_t>(ball_col_)}; }
    int ball_col_velocity() const noexcept { return dcol_; }
    long paddle_col() const noexcept { return own_; }
    long opponent_col() const noexcept { return opp_; }
    int score() const noexcept { return score_; }

private:
    void serve(int row_direction);

    long ball_row_ = 0, ball_col_ = 0;
    int drow_ = 1, dcol_ = 1;
    long own_ = 0, opp_ = 0;
    int score_ = 0;
    int serve_col_direction_ = 1;
};

}  // namespace hsprobe
