use std::collections::{HashMap, VecDeque};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snakenav_core::planner::{
    a_star, extract_waypoints, kruskal_maze, line_of_sight, maze_cell, path_cost, supercover, Cell,
    OccupancyGrid, Spacing,
};
use snakenav_core::Error;

fn dijkstra_cost(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    let mut g = UnGraph::<Cell, f64>::new_undirected();
    let mut ids: HashMap<Cell, NodeIndex> = HashMap::new();
    for c in grid.free_cells() {
        ids.insert(c, g.add_node(c));
    }
    for c in grid.free_cells() {
        for n in [Cell::new(c.x + 1, c.y), Cell::new(c.x, c.y + 1)] {
            if grid.is_free(n) {
                g.add_edge(ids[&c], ids[&n], grid.cell_size());
            }
        }
    }
    dijkstra(&g, ids[&start], Some(ids[&goal]), |e| *e.weight())
        .get(&ids[&goal])
        .copied()
}

fn random_free(grid: &OccupancyGrid, rng: &mut ChaCha8Rng) -> Cell {
    let free: Vec<Cell> = grid.free_cells().collect();
    free[rng.random_range(0..free.len())]
}

fn assert_valid_path(grid: &OccupancyGrid, path: &[Cell], start: Cell, goal: Cell) {
    assert_eq!(path.first(), Some(&start));
    assert_eq!(path.last(), Some(&goal));
    for w in path.windows(2) {
        assert_eq!(w[0].manhattan(w[1]), 1);
        assert!(grid.is_free(w[1]));
    }
}

#[test]
fn a_star_matches_dijkstra_on_random_mazes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..100 {
        let (cx, cy) = (rng.random_range(2..10), rng.random_range(2..10));
        let grid = kruskal_maze(cx, cy, seed).unwrap();
        let (s, g) = (random_free(&grid, &mut rng), random_free(&grid, &mut rng));
        let path = a_star(&grid, s, g).unwrap();
        assert_valid_path(&grid, &path, s, g);
        assert_eq!(Some(path_cost(&grid, &path)), dijkstra_cost(&grid, s, g), "seed {seed}");
    }
}

#[test]
fn a_star_matches_dijkstra_on_cluttered_rooms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let mut grid = OccupancyGrid::open_room(14, 11, 0.5).unwrap();
        for c in grid.clone().free_cells() {
            if rng.random_bool(0.3) {
                grid.set(c, true);
            }
        }
        if grid.free_cells().count() < 2 {
            continue;
        }
        let (s, g) = (random_free(&grid, &mut rng), random_free(&grid, &mut rng));
        let path = a_star(&grid, s, g).unwrap();
        match dijkstra_cost(&grid, s, g) {
            Some(cost) => {
                assert_valid_path(&grid, &path, s, g);
                assert_eq!(path_cost(&grid, &path), cost);
            }
            None => assert!(path.is_empty()),
        }
    }
}

/// Corridor graph over maze cells, built from the openings in the grid.
fn corridor_graph(grid: &OccupancyGrid, cx: usize, cy: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); cx * cy];
    for j in 0..cy {
        for i in 0..cx {
            if i + 1 < cx && grid.is_free(Cell::new(2 * i + 2, 2 * j + 1)) {
                adj[j * cx + i].push(j * cx + i + 1);
                adj[j * cx + i + 1].push(j * cx + i);
            }
            if j + 1 < cy && grid.is_free(Cell::new(2 * i + 1, 2 * j + 2)) {
                adj[j * cx + i].push((j + 1) * cx + i);
                adj[(j + 1) * cx + i].push(j * cx + i);
            }
        }
    }
    adj
}

#[test]
fn every_maze_is_perfect() {
    for seed in 0..100u64 {
        let (cx, cy) = (2 + (seed as usize % 9), 2 + (seed as usize * 7 % 8));
        let grid = kruskal_maze(cx, cy, seed).unwrap();
        assert!(grid.border_is_closed());
        for y in (0..grid.height()).step_by(2) {
            for x in (0..grid.width()).step_by(2) {
                assert!(grid.is_occupied(Cell::new(x, y)), "pillar {x},{y} opened");
            }
        }
        let adj = corridor_graph(&grid, cx, cy);
        let edges: usize = adj.iter().map(Vec::len).sum::<usize>() / 2;
        assert_eq!(edges, cx * cy - 1, "seed {seed}");
        let mut seen = vec![false; cx * cy];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "seed {seed} disconnected");
    }
}

/// Counts simple paths between two nodes by exhaustive DFS.
fn simple_paths(adj: &[Vec<usize>], u: usize, goal: usize, on_path: &mut Vec<bool>) -> usize {
    if u == goal {
        return 1;
    }
    on_path[u] = true;
    let mut n = 0;
    for &v in &adj[u] {
        if !on_path[v] {
            n += simple_paths(adj, v, goal, on_path);
        }
    }
    on_path[u] = false;
    n
}

#[test]
fn eight_by_eight_maze_has_unique_corridor_paths() {
    let grid = kruskal_maze(8, 8, 42).unwrap();
    let adj = corridor_graph(&grid, 8, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (a, b) = (rng.random_range(0..64), rng.random_range(0..64));
        assert_eq!(simple_paths(&adj, a, b, &mut vec![false; 64]), 1);
    }
}

#[test]
fn distinct_seeds_give_distinct_mazes() {
    let mut seen = std::collections::HashSet::new();
    for seed in 0..100 {
        seen.insert(kruskal_maze(5, 5, seed).unwrap().to_string());
    }
    assert!(seen.len() > 95);
}

#[test]
fn maze_cells_are_free() {
    let g = kruskal_maze(3, 4, 5).unwrap();
    for j in 0..4 {
        for i in 0..3 {
            assert!(g.is_free(maze_cell(i, j)));
        }
    }
}

/// Closed segment against closed unit square, by Liang-Barsky clipping.
fn segment_touches_square(p0: [f64; 2], p1: [f64; 2], c: Cell) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let lo = [c.x as f64, c.y as f64];
    for k in 0..2 {
        for (p, q) in [(-d[k], p0[k] - lo[k]), (d[k], lo[k] + 1.0 - p0[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
    }
    t0 <= t1
}

proptest! {
    #[test]
    fn supercover_matches_geometric_oracle(ax in 0usize..12, ay in 0usize..12, bx in 0usize..12, by in 0usize..12) {
        let (a, b) = (Cell::new(ax, ay), Cell::new(bx, by));
        let mut got = supercover(a, b);
        got.sort();
        got.dedup();
        let p0 = [ax as f64 + 0.5, ay as f64 + 0.5];
        let p1 = [bx as f64 + 0.5, by as f64 + 0.5];
        let mut want = Vec::new();
        for x in ax.min(bx)..=ax.max(bx) {
            for y in ay.min(by)..=ay.max(by) {
                if segment_touches_square(p0, p1, Cell::new(x, y)) {
                    want.push(Cell::new(x, y));
                }
            }
        }
        want.sort();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn straight_corridor_waypoints_every_two_metres() {
    let grid = OccupancyGrid::open_room(12, 3, 1.0).unwrap();
    let path: Vec<Cell> = (1..=10).map(|x| Cell::new(x, 1)).collect();
    let w = extract_waypoints(&grid, &path, Spacing::default()).unwrap();
    let xs: Vec<f64> = w.waypoints.iter().map(|p| p[0]).collect();
    assert_eq!(xs, vec![1.5, 3.5, 5.5, 7.5, 9.5, 10.5]);
}

#[test]
fn l_shaped_corridor_keeps_the_corner() {
    // Corridor along y = 1 then up x = 6 with solid walls inside the bend.
    let mut grid = OccupancyGrid::filled(8, 8, 1.0).unwrap();
    let mut path: Vec<Cell> = (1..=6).map(|x| Cell::new(x, 1)).collect();
    path.extend((2..=6).map(|y| Cell::new(6, y)));
    for &c in &path {
        grid.set(c, false);
    }
    let w = extract_waypoints(&grid, &path, Spacing::default()).unwrap();
    for pair in w.cells.windows(2) {
        assert!(line_of_sight(&grid, pair[0], pair[1]));
    }
    assert!(w.cells.contains(&Cell::new(6, 1)));
}

#[test]
fn maze_waypoints_respect_spacing_and_sight() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..60 {
        let grid = kruskal_maze(rng.random_range(2..8), rng.random_range(2..8), seed).unwrap();
        let (s, g) = (random_free(&grid, &mut rng), random_free(&grid, &mut rng));
        let path = a_star(&grid, s, g).unwrap();
        let spacing = Spacing::default();
        let w = extract_waypoints(&grid, &path, spacing).unwrap();
        assert_eq!(w.cells.first(), Some(&s));
        assert_eq!(w.cells.last(), Some(&g));
        let lengths = w.segment_lengths();
        for (i, d) in lengths.iter().enumerate() {
            assert!(*d <= spacing.max + 1e-9);
            if i + 1 < lengths.len() {
                assert!(*d >= spacing.min - 1e-9);
            }
        }
        for pair in w.cells.windows(2) {
            assert!(line_of_sight(&grid, pair[0], pair[1]));
        }
    }
}

#[test]
fn open_room_waypoints_with_fine_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = OccupancyGrid::open_room(30, 30, 0.25).unwrap();
    let spacing = Spacing::default();
    for _ in 0..30 {
        let (s, g) = (random_free(&grid, &mut rng), random_free(&grid, &mut rng));
        let w = extract_waypoints(&grid, &a_star(&grid, s, g).unwrap(), spacing).unwrap();
        let lengths = w.segment_lengths();
        for (i, d) in lengths.iter().enumerate() {
            assert!(*d <= spacing.max + 1e-9);
            if i + 1 < lengths.len() {
                assert!(*d >= spacing.min - 1e-9, "{d}");
            }
        }
    }
}

#[test]
fn blocked_start_is_reported() {
    let grid = kruskal_maze(3, 3, 0).unwrap();
    assert!(matches!(
        a_star(&grid, Cell::new(0, 0), maze_cell(1, 1)),
        Err(Error::BlockedEndpoint(0, 0))
    ));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("maze.txt");
    let g = kruskal_maze(4, 3, 17).unwrap();
    g.save(&p).unwrap();
    assert_eq!(OccupancyGrid::load(&p).unwrap(), g);
}
