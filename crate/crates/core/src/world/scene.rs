use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{OccupancyGrid, CELL};
use super::WorldError;
use crate::geometry::Point;

const MIN_ROOM_CELLS: i64 = 12;
const DOOR_CELLS: i64 = 4;
const DOOR_MARGIN_CELLS: i64 = 1;
const MAX_ATTEMPTS: usize = 64;
const EXTRA_DOOR_PROBABILITY: f64 = 0.25;

pub const ROOM_TYPES: [&str; 13] = [
    "living room",
    "kitchen",
    "bedroom",
    "bathroom",
    "dining room",
    "hallway",
    "office",
    "laundry room",
    "closet",
    "garage",
    "library",
    "game room",
    "nursery",
];

/// Object labels that can appear in a room of the given type.
pub fn objects_for(room_type: &str) -> &'static [&'static str] {
    match room_type {
        "living room" => &[
            "sofa",
            "lamp",
            "coffee table",
            "bookshelf",
            "rug",
            "painting",
            "clock",
            "curtains",
            "fireplace",
            "armchair",
            "tv stand",
            "plant",
        ],
        "kitchen" => &[
            "counter",
            "stove",
            "refrigerator",
            "sink",
            "microwave",
            "oven",
            "dishwasher",
            "kitchen island",
            "stool",
            "cabinet",
            "toaster",
            "kettle",
        ],
        "bedroom" => &[
            "bed",
            "nightstand",
            "wardrobe",
            "dresser",
            "mirror",
            "bedside lamp",
            "pillow",
            "blanket",
            "desk chair",
            "laundry basket",
            "alarm clock",
            "wall art",
        ],
        "bathroom" => &[
            "toilet",
            "bathtub",
            "shower",
            "washbasin",
            "towel rack",
            "bath mat",
            "medicine cabinet",
            "hamper",
            "soap dispenser",
            "vanity",
            "scale",
            "shelf",
        ],
        "dining room" => &[
            "dining table",
            "chair",
            "chandelier",
            "sideboard",
            "china cabinet",
            "vase",
            "candle holder",
            "placemat",
            "wine rack",
            "buffet",
            "centerpiece",
            "bench",
        ],
        "hallway" => &[
            "coat rack",
            "shoe rack",
            "console table",
            "umbrella stand",
            "wall mirror",
            "runner rug",
            "key hook",
            "picture frame",
            "ceiling light",
            "radiator",
            "doormat",
            "bench seat",
        ],
        "office" => &[
            "desk",
            "office chair",
            "computer",
            "monitor",
            "printer",
            "filing cabinet",
            "desk lamp",
            "whiteboard",
            "bookcase",
            "paper tray",
            "globe",
            "corkboard",
        ],
        "laundry room" => &[
            "washing machine",
            "dryer",
            "ironing board",
            "drying rack",
            "detergent shelf",
            "utility sink",
            "laundry hamper",
            "iron",
            "clothesline",
            "mop",
            "bucket",
            "broom",
        ],
        "closet" => &[
            "hanger rail",
            "shoe shelf",
            "storage box",
            "suitcase",
            "hat box",
            "garment bag",
            "step stool",
            "drawer unit",
            "boot tray",
            "scarf hook",
            "tie rack",
            "belt rack",
        ],
        "garage" => &[
            "car",
            "workbench",
            "tool chest",
            "bicycle",
            "lawn mower",
            "ladder",
            "storage shelf",
            "garbage bin",
            "paint cans",
            "toolbox",
            "spare tire",
            "garden hose",
        ],
        "library" => &[
            "bookcase wall",
            "reading chair",
            "reading lamp",
            "globe stand",
            "writing desk",
            "ladder rail",
            "atlas",
            "magazine rack",
            "footstool",
            "side table",
            "encyclopedia",
            "bust",
        ],
        "game room" => &[
            "pool table",
            "dartboard",
            "arcade machine",
            "foosball table",
            "bean bag",
            "game console",
            "poker table",
            "cue rack",
            "jukebox",
            "bar stool",
            "pinball machine",
            "scoreboard",
        ],
        "nursery" => &[
            "crib",
            "changing table",
            "rocking chair",
            "toy chest",
            "mobile",
            "stuffed bear",
            "baby monitor",
            "play mat",
            "diaper pail",
            "night light",
            "book basket",
            "stroller",
        ],
        _ => &[],
    }
}

/// Every object label across all room types.
pub fn object_vocab() -> Vec<&'static str> {
    ROOM_TYPES.iter().flat_map(|t| objects_for(t).iter().copied()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x < self.max_x && p.y >= self.min_y && p.y < self.max_y
    }

    pub fn center(&self) -> Point {
        Point::new((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance_to(&self, p: &Point) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        dx.hypot(dy)
    }

    fn interiors_overlap(&self, other: &Rect) -> bool {
        self.min_x < other.max_x && other.min_x < self.max_x && self.min_y < other.max_y && other.min_y < self.max_y
    }

    fn cells(&self) -> impl Iterator<Item = (i64, i64)> {
        let x0 = (self.min_x / CELL).round() as i64;
        let x1 = (self.max_x / CELL).round() as i64;
        let y0 = (self.min_y / CELL).round() as i64;
        let y1 = (self.max_y / CELL).round() as i64;
        (y0..y1).flat_map(move |y| (x0..x1).map(move |x| (x, y)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub label: String,
    pub position: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: usize,
    pub bounds: Rect,
    pub room_type: String,
    pub objects: Vec<SceneObject>,
}

/// An opening through the wall between two rooms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub id: usize,
    pub rooms: [usize; 2],
    pub bounds: Rect,
}

impl Door {
    pub fn center(&self) -> Point {
        self.bounds.center()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub seed: u64,
    pub width_cells: usize,
    pub height_cells: usize,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    grid: OccupancyGrid,
}

impl Scene {
    /// Assembles a scene and rasterizes its occupancy grid. Fails when the
    /// layout violates a scene invariant.
    pub fn from_parts(
        seed: u64,
        width_cells: usize,
        height_cells: usize,
        rooms: Vec<Room>,
        doors: Vec<Door>,
    ) -> Result<Self, WorldError> {
        let mut grid = OccupancyGrid::filled(width_cells, height_cells);
        for room in &rooms {
            room.bounds.cells().for_each(|c| grid.set_free(c));
        }
        for door in &doors {
            door.bounds.cells().for_each(|c| grid.set_free(c));
        }
        let scene = Self {
            seed,
            width_cells,
            height_cells,
            rooms,
            doors,
            grid,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn room_type_vocab() -> &'static [&'static str] {
        &ROOM_TYPES
    }

    pub fn is_free(&self, p: &Point) -> bool {
        self.grid.is_free_point(p)
    }

    pub fn room_at(&self, p: &Point) -> Option<&Room> {
        self.rooms.iter().find(|r| r.bounds.contains(p))
    }

    /// Room containing `p`, or the nearest room when `p` is in a doorway.
    pub fn nearest_room(&self, p: &Point) -> &Room {
        self.room_at(p).unwrap_or_else(|| {
            self.rooms
                .iter()
                .min_by(|a, b| a.bounds.distance_to(p).total_cmp(&b.bounds.distance_to(p)))
                .expect("scene has rooms")
        })
    }

    pub fn room_type_at(&self, p: &Point) -> &str {
        &self.nearest_room(p).room_type
    }

    pub fn objects(&self) -> impl Iterator<Item = (&Room, &SceneObject)> {
        self.rooms.iter().flat_map(|r| r.objects.iter().map(move |o| (r, o)))
    }

    fn validate(&self) -> Result<(), WorldError> {
        let invalid = |msg: String| Err(WorldError::InvalidScene(msg));
        if self.rooms.len() < 2 {
            return invalid("fewer than two rooms".into());
        }
        for (i, a) in self.rooms.iter().enumerate() {
            if a.id != i {
                return invalid(format!("room {i} has id {}", a.id));
            }
            if !ROOM_TYPES.contains(&a.room_type.as_str()) {
                return invalid(format!("unknown room type {:?}", a.room_type));
            }
            if !(5..=12).contains(&a.objects.len()) {
                return invalid(format!("room {i} has {} objects", a.objects.len()));
            }
            for o in &a.objects {
                if !self.is_free(&o.position) || !a.bounds.contains(&o.position) {
                    return invalid(format!("object {:?} outside free space of room {i}", o.label));
                }
            }
            for b in &self.rooms[i + 1..] {
                if a.bounds.interiors_overlap(&b.bounds) {
                    return invalid(format!("rooms {} and {} overlap", a.id, b.id));
                }
            }
        }
        let mut parent: Vec<usize> = (0..self.rooms.len()).collect();
        for d in &self.doors {
            if d.rooms.iter().any(|&r| r >= self.rooms.len()) || d.rooms[0] == d.rooms[1] {
                return invalid(format!("door {} joins invalid rooms", d.id));
            }
            union(&mut parent, d.rooms[0], d.rooms[1]);
        }
        let root = find(&mut parent, 0);
        if (0..self.rooms.len()).any(|r| find(&mut parent, r) != root) {
            return invalid("door graph is disconnected".into());
        }
        Ok(())
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra == rb {
        return false;
    }
    parent[ra.max(rb)] = ra.min(rb);
    true
}

/// Interior cell rectangle, half-open: [x0, x1) x [y0, y1).
#[derive(Clone, Copy, Debug)]
struct CellRect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl CellRect {
    fn w(&self) -> i64 {
        self.x1 - self.x0
    }

    fn h(&self) -> i64 {
        self.y1 - self.y0
    }

    fn to_rect(self) -> Rect {
        Rect {
            min_x: self.x0 as f64 * CELL,
            min_y: self.y0 as f64 * CELL,
            max_x: self.x1 as f64 * CELL,
            max_y: self.y1 as f64 * CELL,
        }
    }
}

/// A wall segment shared by two rooms, as the cell span a door may occupy.
struct SharedWall {
    rooms: [usize; 2],
    vertical: bool,
    line: i64,
    lo: i64,
    hi: i64,
}

fn shared_wall(a: &CellRect, b: &CellRect, ia: usize, ib: usize) -> Option<SharedWall> {
    let need = DOOR_CELLS + 2 * DOOR_MARGIN_CELLS;
    let span = |lo1: i64, hi1: i64, lo2: i64, hi2: i64| (lo1.max(lo2), hi1.min(hi2));
    if a.x1 + 1 == b.x0 || b.x1 + 1 == a.x0 {
        let line = if a.x1 + 1 == b.x0 { a.x1 } else { b.x1 };
        let (lo, hi) = span(a.y0, a.y1, b.y0, b.y1);
        if hi - lo >= need {
            return Some(SharedWall {
                rooms: [ia, ib],
                vertical: true,
                line,
                lo,
                hi,
            });
        }
    }
    if a.y1 + 1 == b.y0 || b.y1 + 1 == a.y0 {
        let line = if a.y1 + 1 == b.y0 { a.y1 } else { b.y1 };
        let (lo, hi) = span(a.x0, a.x1, b.x0, b.x1);
        if hi - lo >= need {
            return Some(SharedWall {
                rooms: [ia, ib],
                vertical: false,
                line,
                lo,
                hi,
            });
        }
    }
    None
}

/// Generates a deterministic multi-room floor plan. Rooms come from a
/// binary space partition of a rectangular footprint; doors are placed on a
/// random spanning tree of the room adjacency graph plus a few extra loops.
pub fn generate_scene(seed: u64, n_rooms: usize) -> Result<Scene, WorldError> {
    if !(2..=12).contains(&n_rooms) {
        return Err(WorldError::InvalidArgument(format!(
            "n_rooms must be in 2..=12, got {n_rooms}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n_rooms as u64);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(scene) = try_generate(&mut rng, seed, n_rooms) {
            return Ok(scene);
        }
    }
    Err(WorldError::Ungeneratable { seed, n_rooms })
}

fn try_generate(rng: &mut ChaCha8Rng, seed: u64, n_rooms: usize) -> Option<Scene> {
    let area: f64 = n_rooms as f64 * rng.random_range(16.0..28.0);
    let aspect: f64 = rng.random_range(0.7..1.4);
    let interior_w = ((area * aspect).sqrt() / CELL).round() as i64;
    let interior_h = ((area / aspect).sqrt() / CELL).round() as i64;
    let width = interior_w + 2;
    let height = interior_h + 2;

    let mut rects = vec![CellRect {
        x0: 1,
        y0: 1,
        x1: width - 1,
        y1: height - 1,
    }];
    while rects.len() < n_rooms {
        let splittable = |r: &CellRect| r.w().max(r.h()) > 2 * MIN_ROOM_CELLS;
        let (idx, _) = rects
            .iter()
            .enumerate()
            .filter(|(_, r)| splittable(r))
            .max_by_key(|(i, r)| (r.w() * r.h(), std::cmp::Reverse(*i)))?;
        let r = rects.swap_remove(idx);
        let (a, b) = if r.w() >= r.h() {
            let s = rng.random_range(r.x0 + MIN_ROOM_CELLS..=r.x1 - MIN_ROOM_CELLS - 1);
            (CellRect { x1: s, ..r }, CellRect { x0: s + 1, ..r })
        } else {
            let s = rng.random_range(r.y0 + MIN_ROOM_CELLS..=r.y1 - MIN_ROOM_CELLS - 1);
            (CellRect { y1: s, ..r }, CellRect { y0: s + 1, ..r })
        };
        rects.push(a);
        rects.push(b);
    }
    rects.sort_by_key(|r| (r.y0, r.x0));

    let mut walls: Vec<SharedWall> = Vec::new();
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            if let Some(w) = shared_wall(&rects[i], &rects[j], i, j) {
                walls.push(w);
            }
        }
    }
    walls.shuffle(rng);
    let mut parent: Vec<usize> = (0..rects.len()).collect();
    let mut chosen = Vec::new();
    for w in &walls {
        if union(&mut parent, w.rooms[0], w.rooms[1]) || rng.random_bool(EXTRA_DOOR_PROBABILITY) {
            chosen.push(w);
        }
    }
    let root = find(&mut parent, 0);
    if (0..rects.len()).any(|r| find(&mut parent, r) != root) {
        return None;
    }
    chosen.sort_by_key(|w| w.rooms);

    let doors = chosen
        .iter()
        .enumerate()
        .map(|(id, w)| {
            let start = rng.random_range(w.lo + DOOR_MARGIN_CELLS..=w.hi - DOOR_MARGIN_CELLS - DOOR_CELLS);
            let cells = if w.vertical {
                CellRect {
                    x0: w.line,
                    x1: w.line + 1,
                    y0: start,
                    y1: start + DOOR_CELLS,
                }
            } else {
                CellRect {
                    x0: start,
                    x1: start + DOOR_CELLS,
                    y0: w.line,
                    y1: w.line + 1,
                }
            };
            Door {
                id,
                rooms: w.rooms,
                bounds: cells.to_rect(),
            }
        })
        .collect();

    let mut types: Vec<&str> = ROOM_TYPES.to_vec();
    types.shuffle(rng);
    let rooms = rects
        .iter()
        .enumerate()
        .map(|(id, r)| {
            let room_type = types[id];
            Room {
                id,
                bounds: r.to_rect(),
                room_type: room_type.to_string(),
                objects: place_objects(rng, r, room_type),
            }
        })
        .collect();

    Scene::from_parts(seed, width as usize, height as usize, rooms, doors).ok()
}

fn place_objects(rng: &mut ChaCha8Rng, r: &CellRect, room_type: &str) -> Vec<SceneObject> {
    let count = rng.random_range(5..=12);
    let labels: Vec<&str> = objects_for(room_type).choose_multiple(rng, count).copied().collect();
    // keep a one-cell margin from the walls
    let mut cells: Vec<(i64, i64)> = (r.y0 + 1..r.y1 - 1)
        .flat_map(|y| (r.x0 + 1..r.x1 - 1).map(move |x| (x, y)))
        .collect();
    cells.shuffle(rng);
    labels
        .into_iter()
        .zip(cells)
        .map(|(label, c)| SceneObject {
            label: label.to_string(),
            position: OccupancyGrid::cell_center(c),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn bfs_reachable(grid: &OccupancyGrid, from: (i64, i64), to: (i64, i64)) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut q = VecDeque::from([from]);
        seen.insert(from);
        while let Some(c) = q.pop_front() {
            if c == to {
                return true;
            }
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = (c.0 + dx, c.1 + dy);
                if !grid.is_occupied(n) && seen.insert(n) {
                    q.push_back(n);
                }
            }
        }
        false
    }

    #[test]
    fn four_room_scene_is_connected() {
        let scene = generate_scene(0, 4).unwrap();
        assert_eq!(scene.rooms.len(), 4);
        assert!(scene.doors.len() >= 3);
    }

    #[test]
    fn room_centers_connected_on_grid() {
        for seed in 0..20 {
            for n in [2, 3, 5, 8, 12] {
                let scene = generate_scene(seed, n).unwrap();
                let centers: Vec<_> = scene
                    .rooms
                    .iter()
                    .map(|r| OccupancyGrid::cell_of(&r.bounds.center()))
                    .collect();
                for c in &centers[1..] {
                    assert!(bfs_reachable(scene.grid(), centers[0], *c), "seed {seed} n {n}");
                }
            }
        }
    }

    #[test]
    fn rooms_have_distinct_types_and_valid_objects() {
        let scene = generate_scene(7, 12).unwrap();
        let mut types: Vec<_> = scene.rooms.iter().map(|r| r.room_type.clone()).collect();
        types.sort();
        types.dedup();
        assert_eq!(types.len(), 12);
        for room in &scene.rooms {
            assert!((5..=12).contains(&room.objects.len()));
            let vocab = objects_for(&room.room_type);
            assert!(room.objects.iter().all(|o| vocab.contains(&o.label.as_str())));
        }
    }

    #[test]
    fn out_of_range_room_count_rejected() {
        assert!(matches!(generate_scene(0, 1), Err(WorldError::InvalidArgument(_))));
        assert!(matches!(generate_scene(0, 13), Err(WorldError::InvalidArgument(_))));
    }

    #[test]
    fn overlapping_rooms_rejected() {
        let scene = generate_scene(3, 2).unwrap();
        let mut rooms = scene.rooms.clone();
        rooms[1].bounds = rooms[0].bounds;
        let err = Scene::from_parts(3, scene.width_cells, scene.height_cells, rooms, scene.doors.clone());
        assert!(matches!(err, Err(WorldError::InvalidScene(_))));
    }
}
