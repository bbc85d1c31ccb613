//! Reference configurations of the simulation study.

use std::collections::BTreeMap;

use super::{Estimator, StudyConfig};
use crate::builders::BinaryMethod;
use crate::collapse::CollapseRule;
use crate::error::{Error, Result};
use crate::nac::{Family, NacSpec};

const FIG11: &str = include_str!("../../data/fig11.nwk");
const FIG12: &str = include_str!("../../data/fig12.nwk");

pub const PAPER_CONFIG_NAMES: [&str; 13] = [
    "fig7_left",
    "fig7_middle",
    "fig7_right",
    "fig8_left",
    "fig8_middle",
    "fig8_right",
    "fig9_left",
    "fig9_middle",
    "fig9_right",
    "fig10_left",
    "fig10_right",
    "fig11",
    "fig12",
];

const SAMPLE_SIZES: [usize; 3] = [30, 100, 500];

/// Drops `#` comment lines.
fn newick_body(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn spec(newick: &str, family: Family, entries: &[([&str; 2], f64)]) -> NacSpec {
    let entries: Vec<(&[&str], Family, f64)> = entries.iter().map(|(l, t)| (&l[..], family, *t)).collect();
    NacSpec::from_mrca(newick, &entries).expect("built-in configuration")
}

fn fig7(root: f64, a: f64, b: f64) -> NacSpec {
    spec(
        "((U1,U2),(U3,U4));",
        Family::Clayton,
        &[(["U1", "U3"], root), (["U1", "U2"], a), (["U3", "U4"], b)],
    )
}

fn fig8(root: f64, a: f64) -> NacSpec {
    spec("(U1,U2,(U3,U4));", Family::Clayton, &[(["U1", "U3"], root), (["U3", "U4"], a)])
}

fn fig9(root: f64, mid: f64, a: f64) -> NacSpec {
    spec(
        "(U1,U2,(U5,(U3,U4)));",
        Family::Gumbel,
        &[(["U1", "U3"], root), (["U5", "U3"], mid), (["U3", "U4"], a)],
    )
}

fn fig10(t: [f64; 6]) -> NacSpec {
    spec(
        "((U1,(U2,U3)),(U4,(U5,(U6,U7))));",
        Family::Frank,
        &[
            (["U1", "U7"], t[0]),
            (["U1", "U2"], t[1]),
            (["U2", "U3"], t[2]),
            (["U4", "U5"], t[3]),
            (["U5", "U6"], t[4]),
            (["U6", "U7"], t[5]),
        ],
    )
}

fn fig11() -> NacSpec {
    spec(
        &newick_body(FIG11),
        Family::Joe,
        &[
            (["U1", "U15"], 0.1),
            (["U1", "U2"], 0.25),
            (["U3", "U4"], 0.5),
            (["U8", "U9"], 0.5),
            (["U9", "U10"], 0.75),
            (["U5", "U6"], 0.35),
            (["U6", "U7"], 0.45),
        ],
    )
}

fn fig12() -> NacSpec {
    spec(
        &newick_body(FIG12),
        Family::Gumbel,
        &[
            (["U1", "U40"], 0.1),
            (["U1", "U2"], 0.2),
            (["U6", "U7"], 0.3),
            (["U7", "U8"], 0.4),
            (["U8", "U9"], 0.5),
            (["U11", "U12"], 0.6),
            (["U12", "U13"], 0.7),
            (["U13", "U14"], 0.8),
            (["U3", "U4"], 0.75),
            (["U9", "U10"], 0.8),
            (["U29", "U30"], 0.7),
            (["U33", "U34"], 0.8),
            (["U16", "U17"], 0.3),
            (["U18", "U19"], 0.5),
            (["U19", "U20"], 0.6),
            (["U24", "U25"], 0.5),
            (["U26", "U27"], 0.7),
            (["U22", "U23"], 0.7),
        ],
    )
}

fn build(name: &str) -> Option<StudyConfig> {
    let nac = match name {
        "fig7_left" => fig7(0.4, 0.6, 0.6),
        "fig7_middle" => fig7(0.3, 0.7, 0.7),
        "fig7_right" => fig7(0.2, 0.8, 0.8),
        "fig8_left" => fig8(0.4, 0.6),
        "fig8_middle" => fig8(0.3, 0.7),
        "fig8_right" => fig8(0.2, 0.8),
        "fig9_left" => fig9(0.4, 0.5, 0.6),
        "fig9_middle" => fig9(0.3, 0.5, 0.7),
        "fig9_right" => fig9(0.2, 0.5, 0.8),
        "fig10_left" => fig10([0.35, 0.5, 0.65, 0.45, 0.55, 0.65]),
        "fig10_right" => fig10([0.2, 0.5, 0.8, 0.4, 0.6, 0.8]),
        "fig11" => fig11(),
        "fig12" => fig12(),
        _ => return None,
    };
    let estimators = if name == "fig12" {
        vec![Estimator::two_step(BinaryMethod::Kt, CollapseRule::Kagg)]
    } else {
        Estimator::standard()
    };
    Some(StudyConfig::new(nac, SAMPLE_SIZES.to_vec(), estimators))
}

/// Named reference configurations.
pub fn paper_configs() -> BTreeMap<&'static str, StudyConfig> {
    PAPER_CONFIG_NAMES.iter().map(|&n| (n, build(n).unwrap())).collect()
}

pub fn paper_config(name: &str) -> Result<StudyConfig> {
    build(name).ok_or_else(|| {
        Error::InvalidParameter(format!("unknown configuration `{name}`; known: {}", PAPER_CONFIG_NAMES.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nac::{check_nesting, NestingReport};

    #[test]
    fn configurations_are_valid() {
        let all = paper_configs();
        assert_eq!(all.len(), PAPER_CONFIG_NAMES.len());
        for (name, c) in &all {
            c.validate().unwrap();
            assert_eq!(check_nesting(&c.nac), NestingReport::Ok, "{name}");
            assert_eq!(c.replicates, 100);
        }
        let dims: Vec<usize> = ["fig7_right", "fig9_left", "fig10_left", "fig11", "fig12"]
            .iter()
            .map(|n| all[n].nac.tree().leaf_count())
            .collect();
        assert_eq!(dims, vec![4, 5, 7, 15, 40]);
        assert_eq!(all["fig11"].nac.generators().len(), 7);
        assert_eq!(all["fig12"].nac.generators().len(), 18);
        assert_eq!(all["fig12"].estimators.len(), 1);
        assert!(paper_config("fig99").is_err());
    }

    #[test]
    fn reference_parameters() {
        let c = paper_config("fig7_right").unwrap();
        let t = c.nac.tree();
        let tau = |a: &str, b: &str| c.nac.generator(t.mrca(&[a, b]).unwrap()).unwrap().tau();
        assert_eq!((tau("U1", "U4"), tau("U1", "U2"), tau("U3", "U4")), (0.2, 0.8, 0.8));
        let c = paper_config("fig10_right").unwrap();
        let t = c.nac.tree();
        let tau = |a: &str, b: &str| c.nac.generator(t.mrca(&[a, b]).unwrap()).unwrap().tau();
        assert_eq!(tau("U1", "U7"), 0.2);
        assert_eq!(tau("U2", "U3"), 0.8);
        assert_eq!(tau("U4", "U7"), 0.4);
    }
}
