use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid coordinate, `row` counted from the top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Plain-text grid map.
///
/// One character per cell: `#` wall, `.` floor, `S` start, `G` goal,
/// `K` key, `D` door (initially closed). Rows must all have the same width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    doors: Vec<(Cell, bool)>,
    key: Option<Cell>,
    start: Option<Cell>,
    goal: Option<Cell>,
}

const FOURROOMS_7: &str = include_str!("../../layouts/fourrooms_7.txt");
const FOURROOMS_11: &str = include_str!("../../layouts/fourrooms_11.txt");
const NINEROOMS_13: &str = include_str!("../../layouts/ninerooms_13.txt");
const KEYDOOR_7: &str = include_str!("../../layouts/keydoor_7.txt");
const KEYDOOR_11: &str = include_str!("../../layouts/keydoor_11.txt");

/// Names of the layouts shipped with the crate.
pub const BUNDLED_LAYOUTS: [&str; 5] = [
    "fourrooms_7",
    "fourrooms_11",
    "ninerooms_13",
    "keydoor_7",
    "keydoor_11",
];

impl GridLayout {
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::Layout {
                line: 1,
                msg: "empty layout".into(),
            });
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut layout = GridLayout {
            width,
            height,
            walls: vec![false; width * height],
            doors: Vec::new(),
            key: None,
            start: None,
            goal: None,
        };
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::Layout {
                    line: r + 1,
                    msg: format!(
                        "ragged row: expected width {width}, got {}",
                        line.chars().count()
                    ),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                let cell = Cell::new(r, c);
                let dup = |what: &str| Error::Layout {
                    line: r + 1,
                    msg: format!("more than one {what}"),
                };
                match ch {
                    '#' => layout.walls[r * width + c] = true,
                    '.' => {}
                    'S' => {
                        if layout.start.replace(cell).is_some() {
                            return Err(dup("start"));
                        }
                    }
                    'G' => {
                        if layout.goal.replace(cell).is_some() {
                            return Err(dup("goal"));
                        }
                    }
                    'K' => {
                        if layout.key.replace(cell).is_some() {
                            return Err(dup("key"));
                        }
                    }
                    'D' => layout.doors.push((cell, false)),
                    other => {
                        return Err(Error::Layout {
                            line: r + 1,
                            msg: format!("unknown cell character {other:?}"),
                        })
                    }
                }
            }
        }
        layout.validate()?;
        Ok(layout)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name {
            "fourrooms_7" => FOURROOMS_7,
            "fourrooms_11" => FOURROOMS_11,
            "ninerooms_13" => NINEROOMS_13,
            "keydoor_7" => KEYDOOR_7,
            "keydoor_11" => KEYDOOR_11,
            _ => return Err(Error::arg(format!("no bundled layout named {name:?}"))),
        };
        Self::parse(text)
    }

    /// Loads a layout by bundled name or from a file path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUNDLED_LAYOUTS.contains(&name_or_path) {
            return Self::bundled(name_or_path);
        }
        let text = std::fs::read_to_string(name_or_path).map_err(|e| Error::io(name_or_path, e))?;
        Self::parse(&text)
    }

    /// Four rooms in a `size`×`size` grid (border included), one doorway per
    /// inner wall segment.
    pub fn four_rooms(size: usize) -> Result<Self> {
        if size < 5 || size.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "four-rooms size must be odd and >= 5, got {size}"
            )));
        }
        let mut layout = Self::walled(size, size);
        let mid = size / 2;
        for i in 0..size {
            layout.set_wall(Cell::new(mid, i), true);
            layout.set_wall(Cell::new(i, mid), true);
        }
        let offset = (mid - 2) / 2;
        for door in [
            Cell::new(mid, 1 + offset),
            Cell::new(mid, mid + 1 + offset),
            Cell::new(1 + offset, mid),
            Cell::new(mid + 1 + offset, mid),
        ] {
            layout.set_wall(door, false);
        }
        Ok(layout)
    }

    /// 3×3 lattice of square rooms with a doorway in the middle of every
    /// shared wall. `size` must be `3m + 4` for room side `m ≥ 1`.
    pub fn nine_rooms(size: usize) -> Result<Self> {
        if size < 7 || !(size - 4).is_multiple_of(3) || ((size - 4) / 3).is_multiple_of(2) {
            return Err(Error::arg(format!(
                "nine-rooms size must be 3m+4 with odd room side m, got {size}"
            )));
        }
        let room = (size - 4) / 3;
        let mut layout = Self::walled(size, size);
        let lines = [room + 1, 2 * room + 2];
        for &l in &lines {
            for i in 0..size {
                layout.set_wall(Cell::new(l, i), true);
                layout.set_wall(Cell::new(i, l), true);
            }
        }
        let centers: Vec<usize> = (0..3).map(|j| j * (room + 1) + 1 + room / 2).collect();
        for &l in &lines {
            for &c in &centers {
                layout.set_wall(Cell::new(l, c), false);
                layout.set_wall(Cell::new(c, l), false);
            }
        }
        Ok(layout)
    }

    /// Two rooms split by a vertical wall holding a single locked door; the
    /// key lies in the left room.
    pub fn key_door(size: usize) -> Result<Self> {
        if size < 5 || size.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "key-door size must be odd and >= 5, got {size}"
            )));
        }
        let mut layout = Self::walled(size, size);
        let mid = size / 2;
        for r in 0..size {
            layout.set_wall(Cell::new(r, mid), true);
        }
        let door = Cell::new(mid, mid);
        layout.set_wall(door, false);
        layout.doors.push((door, false));
        layout.key = Some(Cell::new(size - 2, 1));
        layout.start = Some(Cell::new(1, 1));
        layout.goal = Some(Cell::new(size - 2, size - 2));
        Ok(layout)
    }

    fn walled(width: usize, height: usize) -> Self {
        let mut layout = GridLayout {
            width,
            height,
            walls: vec![false; width * height],
            doors: Vec::new(),
            key: None,
            start: None,
            goal: None,
        };
        for r in 0..height {
            for c in 0..width {
                if r == 0 || c == 0 || r + 1 == height || c + 1 == width {
                    layout.walls[r * width + c] = true;
                }
            }
        }
        layout
    }

    fn set_wall(&mut self, cell: Cell, wall: bool) {
        self.walls[cell.row * self.width + cell.col] = wall;
    }

    pub fn with_start(mut self, start: Cell) -> Result<Self> {
        self.start = Some(start);
        self.validate()?;
        Ok(self)
    }

    pub fn with_goal(mut self, goal: Cell) -> Result<Self> {
        self.goal = Some(goal);
        self.validate()?;
        Ok(self)
    }

    pub fn with_endpoints(mut self, start: Cell, goal: Cell) -> Result<Self> {
        self.start = Some(start);
        self.goal = Some(goal);
        self.validate()?;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Option<Cell> {
        self.start
    }

    pub fn goal(&self) -> Option<Cell> {
        self.goal
    }

    pub fn key(&self) -> Option<Cell> {
        self.key
    }

    pub fn doors(&self) -> &[(Cell, bool)] {
        &self.doors
    }

    pub fn is_door(&self, cell: Cell) -> bool {
        self.doors.iter().any(|&(d, _)| d == cell)
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.walls[cell.row * self.width + cell.col]
    }

    /// Non-wall cells in row-major order (doors included).
    pub fn open_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| Cell::new(r, c)))
            .filter(|&c| !self.is_wall(c))
            .collect()
    }

    pub fn neighbor(&self, cell: Cell, dr: isize, dc: isize) -> Option<Cell> {
        let r = cell.row.checked_add_signed(dr)?;
        let c = cell.col.checked_add_signed(dc)?;
        let next = Cell::new(r, c);
        self.in_bounds(next).then_some(next)
    }

    fn validate(&self) -> Result<()> {
        let line = |c: Cell| c.row + 1;
        for (what, cell) in [
            ("start", self.start),
            ("goal", self.goal),
            ("key", self.key),
        ] {
            if let Some(c) = cell {
                if self.is_wall(c) {
                    return Err(Error::Layout {
                        line: line(c),
                        msg: format!("{what} {c} is on a wall"),
                    });
                }
                if self.is_door(c) {
                    return Err(Error::Layout {
                        line: line(c),
                        msg: format!("{what} {c} is on a door"),
                    });
                }
            }
        }
        if let (Some(s), Some(g)) = (self.start, self.goal) {
            if s == g {
                return Err(Error::Layout {
                    line: line(s),
                    msg: "start and goal coincide".into(),
                });
            }
        }
        let open = self.open_cells();
        if let Some(&first) = open.first() {
            let mut seen = vec![false; self.width * self.height];
            let mut queue = VecDeque::from([first]);
            seen[first.row * self.width + first.col] = true;
            let mut count = 1;
            while let Some(c) = queue.pop_front() {
                for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    if let Some(n) = self.neighbor(c, dr, dc) {
                        if !self.is_wall(n) && !seen[n.row * self.width + n.col] {
                            seen[n.row * self.width + n.col] = true;
                            count += 1;
                            queue.push_back(n);
                        }
                    }
                }
            }
            if count != open.len() {
                return Err(Error::Layout {
                    line: 1,
                    msg: "open cells are not mutually reachable with doors open".into(),
                });
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let cell = Cell::new(r, c);
                let ch = if self.is_wall(cell) {
                    '#'
                } else if self.start == Some(cell) {
                    'S'
                } else if self.goal == Some(cell) {
                    'G'
                } else if self.key == Some(cell) {
                    'K'
                } else if self.is_door(cell) {
                    'D'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
