//! Game records, CSV ingestion, train/validation splits and the 45° rank rotation.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest RPI rank observed in the seasons the models were designed around.
/// Larger ranks are accepted but logged.
pub const TYPICAL_MAX_RANK: u32 = 351;

pub const CSV_COLUMNS: [&str; 7] = [
    "date",
    "home_team",
    "road_team",
    "home_rank",
    "road_rank",
    "home_score",
    "road_score",
];

/// One game with a true home team.
///
/// `mov` is road points minus home points, so a negative value means the home
/// team won.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub date: NaiveDate,
    pub home_team: String,
    pub road_team: String,
    pub home_rank: u32,
    pub road_rank: u32,
    pub home_score: u32,
    pub road_score: u32,
    mov: i32,
}

impl GameRecord {
    pub fn new(
        date: NaiveDate,
        home_team: impl Into<String>,
        road_team: impl Into<String>,
        home_rank: u32,
        road_rank: u32,
        home_score: u32,
        road_score: u32,
    ) -> Result<Self> {
        if home_rank == 0 || road_rank == 0 {
            return Err(Error::param("data", "ranks must be positive integers"));
        }
        Ok(Self {
            date,
            home_team: home_team.into(),
            road_team: road_team.into(),
            home_rank,
            road_rank,
            home_score,
            road_score,
            mov: road_score as i32 - home_score as i32,
        })
    }

    /// Road score minus home score.
    pub fn mov(&self) -> i32 {
        self.mov
    }

    pub fn rank_pair(&self) -> RankPair {
        RankPair {
            road: self.road_rank,
            home: self.home_rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RankPair {
    pub road: u32,
    pub home: u32,
}

/// Ranks expressed on the axes rotated 45° counter-clockwise: `x` runs along
/// the rank sum, `y` along the rank difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedPoint<T> {
    pub x: T,
    pub y: T,
}

pub fn rotate<T: Scalar>(road_rank: T, home_rank: T) -> RotatedPoint<T> {
    let c = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    RotatedPoint {
        x: road_rank * c + home_rank * c,
        y: road_rank * c - home_rank * c,
    }
}

/// Ordered games plus the replicate groups over identical rank pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    games: Vec<GameRecord>,
    replicate_index: BTreeMap<RankPair, Vec<usize>>,
}

impl Dataset {
    pub fn new(games: Vec<GameRecord>) -> Self {
        let mut replicate_index: BTreeMap<RankPair, Vec<usize>> = BTreeMap::new();
        for (i, g) in games.iter().enumerate() {
            replicate_index.entry(g.rank_pair()).or_default().push(i);
        }
        Self {
            games,
            replicate_index,
        }
    }

    pub fn games(&self) -> &[GameRecord] {
        &self.games
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn replicate_index(&self) -> &BTreeMap<RankPair, Vec<usize>> {
        &self.replicate_index
    }

    /// Number of distinct (road, home) rank pairs.
    pub fn distinct_pairs(&self) -> usize {
        self.replicate_index.len()
    }

    pub fn road_ranks<T: Scalar>(&self) -> Vec<T> {
        self.games.iter().map(|g| T::from_count(g.road_rank as usize)).collect()
    }

    pub fn home_ranks<T: Scalar>(&self) -> Vec<T> {
        self.games.iter().map(|g| T::from_count(g.home_rank as usize)).collect()
    }

    pub fn movs<T: Scalar>(&self) -> Vec<T> {
        self.games
            .iter()
            .map(|g| T::from_i32(g.mov).expect("mov representable"))
            .collect()
    }

    /// Copy of the games at `positions`, in the order given.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        Dataset::new(positions.iter().map(|&i| self.games[i].clone()).collect())
    }
}

/// Parse the game CSV. Row numbers in errors count data rows from 1.
pub fn parse_games(text: &str) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut cols = [0usize; 7];
    for (slot, name) in cols.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let [c_date, c_home, c_road, c_hrank, c_rrank, c_hscore, c_rscore] = cols;

    let mut games = Vec::new();
    let mut warned = false;
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let field = |c: usize, name: &str| -> Result<&str> {
            match rec.get(c) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(Error::Row {
                    row,
                    message: format!("missing value for `{name}`"),
                }),
            }
        };
        let int = |c: usize, name: &str| -> Result<u32> {
            let s = field(c, name)?;
            s.parse::<u32>().map_err(|_| Error::Row {
                row,
                message: format!("`{name}` is not a non-negative integer: {s:?}"),
            })
        };
        let date_s = field(c_date, "date")?;
        let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d").map_err(|_| Error::Row {
            row,
            message: format!("`date` is not an ISO-8601 date: {date_s:?}"),
        })?;
        let home_rank = int(c_hrank, "home_rank")?;
        let road_rank = int(c_rrank, "road_rank")?;
        if home_rank == 0 || road_rank == 0 {
            return Err(Error::Row {
                row,
                message: "ranks must be at least 1".into(),
            });
        }
        if (home_rank > TYPICAL_MAX_RANK || road_rank > TYPICAL_MAX_RANK) && !warned {
            log::warn!("row {row}: rank above {TYPICAL_MAX_RANK} accepted");
            warned = true;
        }
        let home_score = int(c_hscore, "home_score")?;
        let road_score = int(c_rscore, "road_score")?;
        games.push(GameRecord::new(
            date,
            field(c_home, "home_team").unwrap_or(""),
            field(c_road, "road_team").unwrap_or(""),
            home_rank,
            road_rank,
            home_score,
            road_score,
        )?);
    }
    if games.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Dataset::new(games))
}

/// Serialize games back to the ingestion CSV format.
pub fn to_csv(data: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for g in data.games() {
        w.write_record([
            g.date.format("%Y-%m-%d").to_string(),
            g.home_team.clone(),
            g.road_team.clone(),
            g.home_rank.to_string(),
            g.road_rank.to_string(),
            g.home_score.to_string(),
            g.road_score.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Earliest games train; same-day games keep file order.
    Chronological,
    /// Positions shuffled by ChaCha8 seeded with `seed`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub mode: SplitMode,
}

/// Partition into (train, valid). Both parts keep the input order of their games.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if spec.train_count == 0 || spec.train_count >= n {
        return Err(Error::InvalidSplit(format!(
            "train_count {} must lie in [1, {})",
            spec.train_count, n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    match spec.mode {
        SplitMode::Chronological => {
            // stable sort keeps file order within a date
            order.sort_by_key(|&i| data.games[i].date);
        }
        SplitMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
        }
    }
    let (train, valid) = order.split_at(spec.train_count);
    let mut train = train.to_vec();
    let mut valid = valid.to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    Ok((data.subset(&train), data.subset(&valid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "date,home_team,road_team,home_rank,road_rank,home_score,road_score\n";

    fn game(day: u32, home: u32, road: u32, hs: u32, rs: u32) -> GameRecord {
        GameRecord::new(
            NaiveDate::from_ymd_opt(2015, 1, day).unwrap(),
            "H",
            "R",
            home,
            road,
            hs,
            rs,
        )
        .unwrap()
    }

    #[test]
    fn parses_row_and_computes_mov() {
        let d = parse_games(&format!("{HEADER}2015-01-10,A,B,100,50,70,65\n")).unwrap();
        assert_eq!(d.len(), 1);
        let g = &d.games()[0];
        assert_eq!(g.mov(), -5);
        assert_eq!((g.home_rank, g.road_rank), (100, 50));
    }

    #[test]
    fn replicate_group_for_identical_pairs() {
        let text = format!("{HEADER}2015-01-10,A,B,100,50,70,65\n2015-01-11,C,D,100,50,60,62\n");
        let d = parse_games(&text).unwrap();
        assert_eq!(d.distinct_pairs(), 1);
        let members = &d.replicate_index()[&RankPair { road: 50, home: 100 }];
        assert_eq!(members, &vec![0, 1]);
    }

    #[test]
    fn bad_rank_reports_row() {
        let err = parse_games(&format!("{HEADER}2015-01-10,A,B,abc,50,70,65\n")).unwrap_err();
        match err {
            Error::Row { row, message } => {
                assert_eq!(row, 1);
                assert!(message.contains("home_rank"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse_games("date,home_team,road_team,home_rank,road_rank,home_score\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "road_score"));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_games(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_games(HEADER), Err(Error::EmptyInput)));
    }

    #[test]
    fn missing_rank_rejected() {
        let err = parse_games(&format!("{HEADER}2015-01-10,A,B,,50,70,65\n")).unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }));
    }

    #[test]
    fn large_rank_accepted() {
        let d = parse_games(&format!("{HEADER}2015-01-10,A,B,360,50,70,65\n")).unwrap();
        assert_eq!(d.games()[0].home_rank, 360);
    }

    #[test]
    fn chronological_split_sizes_match_paper_protocol() {
        let games: Vec<_> = (0..6024)
            .map(|i| game(1 + (i % 28) as u32, 1 + i as u32 % 351, 1 + (i as u32 * 7) % 351, 70, 60))
            .collect();
        let d = Dataset::new(games);
        let spec = SplitSpec {
            train_count: 4518,
            mode: SplitMode::Chronological,
        };
        let (train, valid) = split(&d, &spec).unwrap();
        assert_eq!(train.len(), 4518);
        assert_eq!(valid.len(), 1506);
        let last_train = train.games().iter().map(|g| g.date).max().unwrap();
        let first_valid = valid.games().iter().map(|g| g.date).min().unwrap();
        assert!(last_train <= first_valid);
    }

    #[test]
    fn chronological_ties_break_by_file_order() {
        let d = Dataset::new(vec![game(2, 1, 1, 1, 0), game(1, 2, 2, 2, 0), game(2, 3, 3, 3, 0), game(1, 4, 4, 4, 0)]);
        let spec = SplitSpec {
            train_count: 3,
            mode: SplitMode::Chronological,
        };
        let (train, valid) = split(&d, &spec).unwrap();
        // day 1 games (positions 1, 3) then the first day-2 game (position 0)
        let ranks: Vec<u32> = train.games().iter().map(|g| g.home_rank).collect();
        assert_eq!(ranks, vec![1, 2, 4]);
        assert_eq!(valid.games()[0].home_rank, 3);
    }

    #[test]
    fn split_rejects_full_train() {
        let d = Dataset::new((0..10).map(|i| game(1, i + 1, 1, 0, 0)).collect());
        let spec = SplitSpec {
            train_count: 10,
            mode: SplitMode::Chronological,
        };
        assert!(matches!(split(&d, &spec), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn random_split_deterministic_and_seed_sensitive() {
        let d = Dataset::new((0..200).map(|i| game(1, i + 1, 1, i, 0)).collect());
        let spec = |seed| SplitSpec {
            train_count: 150,
            mode: SplitMode::Random { seed },
        };
        let a = split(&d, &spec(7)).unwrap();
        let b = split(&d, &spec(7)).unwrap();
        let c = split(&d, &spec(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn rotate_examples() {
        let p = rotate(1.0_f64, 1.0);
        assert!((p.x - 2f64.sqrt()).abs() < 1e-12 && p.y.abs() < 1e-12);
        let p = rotate(351.0_f64, 1.0);
        assert!((p.x - 248.901_587_3).abs() < 1e-6);
        assert!((p.y - 247.487_373_4).abs() < 1e-6);
        let p = rotate(0.0_f64, 0.0);
        assert_eq!((p.x, p.y), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn rotation_preserves_distances(a in -500.0f64..500.0, b in -500.0f64..500.0,
                                        c in -500.0f64..500.0, d in -500.0f64..500.0) {
            let p = rotate(a, b);
            let q = rotate(c, d);
            let before = ((a - c).powi(2) + (b - d).powi(2)).sqrt();
            let after = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
            prop_assert!(((p.x * p.x + p.y * p.y) - (a * a + b * b)).abs() <= 1e-9 * (a * a + b * b).max(1.0));
        }

        #[test]
        fn csv_round_trip(rows in proptest::collection::vec((1u32..28, 1u32..400, 1u32..400, 0u32..150, 0u32..150), 1..40)) {
            let games: Vec<_> = rows.iter().map(|&(d, h, r, hs, rs)| game(d, h, r, hs, rs)).collect();
            let data = Dataset::new(games);
            let back = parse_games(&to_csv(&data).unwrap()).unwrap();
            prop_assert_eq!(back, data);
        }

        #[test]
        fn replicate_groups_partition(rows in proptest::collection::vec((1u32..6, 1u32..6), 1..80)) {
            let data = Dataset::new(rows.iter().map(|&(h, r)| game(1, h, r, 1, 2)).collect());
            let mut seen = vec![false; data.len()];
            for members in data.replicate_index().values() {
                for &i in members {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }

        #[test]
        fn chronological_split_idempotent(n in 3usize..60, k in 1usize..100) {
            let data = Dataset::new((0..n).map(|i| game(1 + (i * 7 % 5) as u32, 1 + i as u32, 1, 0, 0)).collect());
            let spec = SplitSpec { train_count: 1 + k % (n - 1), mode: SplitMode::Chronological };
            let (t1, v1) = split(&data, &spec).unwrap();
            let (t2, v2) = split(&data, &spec).unwrap();
            prop_assert_eq!(t1.len() + v1.len(), n);
            prop_assert_eq!((t1, v1), (t2, v2));
        }
    }
}
