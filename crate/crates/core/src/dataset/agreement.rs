//! Dual-annotation support: merging two annotators' tracks and measuring how
//! well they agree.

use serde::{Deserialize, Serialize};

use crate::dataset::annotation::EpisodeAnnotation;
use crate::error::{Error, Result};
use crate::movement::{MovementClass, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Keep frames where both annotators agree; disagreements become idle.
    #[default]
    Intersect,
    /// Take the first annotator's labels.
    PreferFirst,
}

impl std::str::FromStr for MergePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersect" => Ok(MergePolicy::Intersect),
            "prefer_first" | "prefer-first" => Ok(MergePolicy::PreferFirst),
            other => Err(Error::Validation(format!("unknown merge policy '{other}'"))),
        }
    }
}

fn check_compatible(a: &EpisodeAnnotation, b: &EpisodeAnnotation) -> Result<()> {
    if a.episode_id != b.episode_id {
        return Err(Error::IncompatibleAnnotations(format!(
            "episode ids differ: '{}' vs '{}'",
            a.episode_id, b.episode_id
        )));
    }
    if a.frame_count() != b.frame_count() {
        return Err(Error::IncompatibleAnnotations(format!(
            "frame counts differ: {} vs {}",
            a.frame_count(),
            b.frame_count()
        )));
    }
    if a.fps != b.fps {
        return Err(Error::IncompatibleAnnotations(format!("fps differ: {} vs {}", a.fps, b.fps)));
    }
    Ok(())
}

/// Merges two annotations of the same episode. Attribute flags are OR-ed.
/// The result keeps `a`'s annotator id unless the ids differ, in which case
/// both are joined with `+`.
pub fn merge_annotations(a: &EpisodeAnnotation, b: &EpisodeAnnotation, policy: MergePolicy) -> Result<EpisodeAnnotation> {
    check_compatible(a, b)?;
    let labels = match policy {
        MergePolicy::PreferFirst => a.labels().to_vec(),
        MergePolicy::Intersect => a
            .labels()
            .iter()
            .zip(b.labels())
            .map(|(&x, &y)| if x == y { x } else { MovementClass::Idle })
            .collect(),
    };
    let annotator_id = if a.annotator_id == b.annotator_id {
        a.annotator_id.clone()
    } else {
        format!("{}+{}", a.annotator_id, b.annotator_id)
    };
    Ok(EpisodeAnnotation::new(a.episode_id.clone(), annotator_id, a.fps, labels)
        .with_attributes(a.attributes.union(b.attributes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Fraction of frames with identical labels.
    pub percent: f64,
    /// Cohen's kappa over the frame labels.
    pub kappa: f64,
}

/// Frame-level percent agreement and Cohen's kappa. When both annotators use
/// a single identical label throughout, chance agreement is 1 and kappa is
/// defined as 1.
pub fn agreement(a: &EpisodeAnnotation, b: &EpisodeAnnotation) -> Result<Agreement> {
    check_compatible(a, b)?;
    let n = a.frame_count();
    if n == 0 {
        return Err(Error::UndefinedAgreement);
    }
    let mut matches = 0usize;
    let mut marg_a = [0usize; NUM_CLASSES];
    let mut marg_b = [0usize; NUM_CLASSES];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        if x == y {
            matches += 1;
        }
        marg_a[x.index()] += 1;
        marg_b[y.index()] += 1;
    }
    let n_f = n as f64;
    let percent = matches as f64 / n_f;
    // Products are summed as integers so the result is symmetric bit-for-bit.
    let chance_num: u128 = marg_a.iter().zip(&marg_b).map(|(&p, &q)| p as u128 * q as u128).sum();
    let chance = chance_num as f64 / (n_f * n_f);
    let kappa = if chance_num == (n as u128) * (n as u128) {
        1.0
    } else {
        (percent - chance) / (1.0 - chance)
    };
    Ok(Agreement { percent, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::annotation::{Attributes, Fps};
    use MovementClass::*;

    fn ann(annotator: &str, labels: Vec<MovementClass>) -> EpisodeAnnotation {
        EpisodeAnnotation::new("ep", annotator, Fps::default(), labels)
    }

    #[test]
    fn merge_identical_is_identity() {
        let a = ann("x", vec![PalmToPalm, Idle, ThumbRub]);
        assert_eq!(merge_annotations(&a, &a, MergePolicy::Intersect).unwrap(), a);
    }

    #[test]
    fn merge_total_disagreement() {
        let a = ann("x", vec![PalmToPalm; 5]);
        let b = ann("y", vec![PalmOverDorsum; 5]);
        let m = merge_annotations(&a, &b, MergePolicy::Intersect).unwrap();
        assert_eq!(m.labels(), &[Idle; 5]);
        let m = merge_annotations(&a, &b, MergePolicy::PreferFirst).unwrap();
        assert_eq!(m.labels(), &[PalmToPalm; 5]);
        assert_eq!(m.annotator_id, "x+y");
    }

    #[test]
    fn merge_ors_attributes() {
        let a = ann("x", vec![Idle]).with_attributes(Attributes { ring: true, ..Default::default() });
        let b = ann("y", vec![Idle]).with_attributes(Attributes { watch: true, ..Default::default() });
        let m = merge_annotations(&a, &b, MergePolicy::Intersect).unwrap();
        assert_eq!(m.attributes, Attributes { ring: true, watch: true, lacquered_nails: false });
    }

    #[test]
    fn incompatible_inputs() {
        let a = ann("x", vec![Idle; 3]);
        let b = ann("y", vec![Idle; 4]);
        assert!(matches!(merge_annotations(&a, &b, MergePolicy::Intersect), Err(Error::IncompatibleAnnotations(_))));
        assert!(matches!(agreement(&a, &b), Err(Error::IncompatibleAnnotations(_))));
        let c = EpisodeAnnotation::new("ep", "y", Fps::integer(25).unwrap(), vec![Idle; 3]);
        assert!(matches!(agreement(&a, &c), Err(Error::IncompatibleAnnotations(_))));
    }

    #[test]
    fn empty_agreement_is_undefined() {
        let a = ann("x", vec![]);
        assert!(matches!(agreement(&a, &a), Err(Error::UndefinedAgreement)));
    }

    #[test]
    fn self_and_disjoint_agreement() {
        let a = ann("x", vec![PalmToPalm, PalmOverDorsum, Idle, Idle]);
        let r = agreement(&a, &a).unwrap();
        assert_eq!(r.percent, 1.0);
        assert_eq!(r.kappa, 1.0);

        let b = ann("y", vec![PalmOverDorsum, PalmToPalm, ThumbRub, ThumbRub]);
        assert_eq!(agreement(&a, &b).unwrap().percent, 0.0);

        let c = ann("z", vec![Idle; 4]);
        assert_eq!(agreement(&c, &c).unwrap().kappa, 1.0);
    }

    #[test]
    fn half_agreement_on_hundred_frames() {
        // First 50 frames agree, last 50 disagree.
        let a = ann("x", [vec![PalmToPalm; 50], vec![ThumbRub; 50]].concat());
        let b = ann("y", [vec![PalmToPalm; 50], vec![FingertipsToPalm; 50]].concat());
        let r = agreement(&a, &b).unwrap();
        assert_eq!(r.percent, 0.5);
        // Marginals: a = {2: .5, 6: .5}, b = {2: .5, 7: .5}; chance = .25.
        assert!((r.kappa - (0.5 - 0.25) / 0.75).abs() < 1e-12);
    }

    #[test]
    fn kappa_matches_hand_computed_table() {
        // 2x2 table: both 2 -> 20, a=2,b=3 -> 5, a=3,b=2 -> 10, both 3 -> 15.
        let a = ann("x", [vec![PalmToPalm; 25], vec![PalmOverDorsum; 25]].concat());
        let b = ann(
            "y",
            [vec![PalmToPalm; 20], vec![PalmOverDorsum; 5], vec![PalmToPalm; 10], vec![PalmOverDorsum; 15]].concat(),
        );
        let r = agreement(&a, &b).unwrap();
        assert!((r.percent - 0.7).abs() < 1e-12);
        // p_e = 0.5*0.6 + 0.5*0.4 = 0.5, kappa = 0.4
        assert!((r.kappa - 0.4).abs() < 1e-12);
    }
}
