//! Inputs shared by the benchmarks in `benches/`.

use incentive_core::{
    accumulate, Format, GoalModel, PointsSystem, ScoredMatch, StreamKey, TableRow,
};

/// One simulated season of `format`: its final table rows and results.
pub fn played_season(format: Format, seed: u64) -> (Vec<TableRow>, Vec<ScoredMatch>) {
    let model = GoalModel::default();
    let mut rng = StreamKey::derive(seed, &[]).stream(0);
    let matches: Vec<ScoredMatch> = format
        .fixtures()
        .into_iter()
        .map(|f| {
            let s = model.sample_scoreline(f.home.pot, f.away.pot, &mut rng);
            ScoredMatch::new(f, s.home_goals, s.away_goals)
        })
        .collect();
    let rows = accumulate(&format.teams(), &matches, &PointsSystem::default())
        .expect("canonical fixtures");
    (rows, matches)
}
