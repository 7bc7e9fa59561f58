use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{exact_distance, DistanceParts, Family, ResolventDiagnostics, ResolventOutcome, ResolventProblem};
use crate::error::Result;
use crate::measures::GridDensity;

pub(super) fn resolve(prob: &ResolventProblem) -> Result<ResolventOutcome> {
    let Family::GridLocalSearch { budget, quantum, seed } = prob.family else { unreachable!() };
    let spec = prob.anchor.spec();
    let delta = quantum / spec.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = prob.anchor.clone();
    let mut cur_phi = prob.phi.evaluate(spec, cur.values())?;
    let mut cur_d = DistanceParts { transport: 0.0, lebesgue: 0.0, total: 0.0 };
    let mut cur_moreau = cur_phi;
    let mut evaluated = 0usize;
    let mut moves: Vec<Vec<usize>> = Vec::new();
    'outer: while evaluated < budget {
        let mut candidates: Vec<(usize, usize)> = cur
            .support()
            .into_iter()
            .filter(|&a| cur.values()[a] >= delta)
            .flat_map(|a| spec.neighbours(a).filter(|&b| !spec.is_ring_index(b)).map(move |b| (a, b)))
            .collect();
        candidates.shuffle(&mut rng);
        for (a, b) in candidates {
            if evaluated >= budget {
                break 'outer;
            }
            evaluated += 1;
            let mut vals = cur.values().to_vec();
            vals[a] -= delta;
            vals[b] += delta;
            if vals[a] < 0.0 {
                vals[a] = 0.0;
            }
            let cand = GridDensity::new(spec.clone(), vals)?;
            let phi = prob.phi.evaluate(spec, cand.values())?;
            let d = exact_distance(&cand, &prob.anchor, &prob.metric, prob.atom_cap)?;
            let moreau = phi + d.total * d.total / (2.0 * prob.tau);
            if moreau < cur_moreau {
                cur = cand;
                cur_phi = phi;
                cur_moreau = moreau;
                cur_d = DistanceParts { transport: d.transport, lebesgue: d.total - d.transport, total: d.total };
                moves.push(vec![a, b]);
                continue 'outer;
            }
        }
        break;
    }
    Ok(ResolventOutcome {
        state: cur,
        phi: cur_phi,
        moreau: cur_moreau,
        distance: cur_d,
        diagnostics: ResolventDiagnostics {
            family: prob.family.describe(),
            candidates_evaluated: evaluated as u64,
            accepted_moves: moves.len(),
            best_parameters: moves,
            crosscheck: None,
        },
    })
}
