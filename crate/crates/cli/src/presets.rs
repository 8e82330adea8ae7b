//! Frozen experiment presets reproducing the reference figures.

use crate::config::ExperimentConfig;

#[derive(Clone, Debug)]
pub enum PresetKind {
    /// One or more plain GD runs (executed in parallel when several).
    GdRuns(Vec<ExperimentConfig>),
    /// Full GD on the single-valley landscape paired with the quasistatic
    /// recurrence.
    QuasistaticCompare(ExperimentConfig),
    /// 1-D loss curves: empirical piecewise loss of a small dataset next to
    /// the uniform-data population loss.
    LossCurve1D {
        magnitudes: Vec<f64>,
        population_c: f64,
        w_max: f64,
        samples: usize,
    },
    /// 2-D two-valley surface from the population construction.
    LossSurface2D {
        ratio: f64,
        population_c: f64,
        extent: f64,
        samples: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub id: &'static str,
    pub figure: &'static str,
    /// Frozen parameters, for `list-presets`.
    pub params: &'static str,
    pub kind: PresetKind,
}

pub fn all_ids() -> [&'static str; 7] {
    ["fig4-left", "fig4-middle", "fig4-right", "fig5", "fig6", "fig7-left", "fig7-right"]
}

pub fn get(id: &str) -> Option<Preset> {
    let preset = match id {
        "fig4-left" => Preset {
            id: "fig4-left",
            figure: "1-D convex subquadratic run with step decay",
            params: "landscape=f1 x0=-5 eta=5->3@100->1@150 steps=300",
            kind: PresetKind::GdRuns(vec![ExperimentConfig::new(
                "f1",
                vec![-5.0],
                vec![(0, 5.0), (100, 3.0), (150, 1.0)],
                300,
            )]),
        },
        "fig4-middle" => Preset {
            id: "fig4-middle",
            figure: "1-D nonconvex run with chaotic oscillation",
            params: "landscape=f2:C=3 x0=-5 eta=2->0.5@500->0.2@700 steps=1000",
            kind: PresetKind::GdRuns(vec![ExperimentConfig::new(
                "f2:C=3",
                vec![-5.0],
                vec![(0, 2.0), (500, 0.5), (700, 0.2)],
                1000,
            )]),
        },
        "fig4-right" => Preset {
            id: "fig4-right",
            figure: "2-D nonconvex run with chaotic oscillation",
            params: "landscape=f3 x0=(-3,3) eta=1->0.3@200->0.1@400 steps=600",
            kind: PresetKind::GdRuns(vec![ExperimentConfig::new(
                "f3",
                vec![-3.0, 3.0],
                vec![(0, 1.0), (200, 0.3), (400, 0.1)],
                600,
            )]),
        },
        "fig5" => Preset {
            id: "fig5",
            figure: "flattening valley: GD vs quasistatic drift",
            params: "landscape=fig5_valley x0=(1,1) eta=3 steps=500",
            kind: PresetKind::QuasistaticCompare({
                let mut cfg =
                    ExperimentConfig::new("fig5_valley", vec![1.0, 1.0], vec![(0, 3.0)], 500);
                cfg.quasistatic_compare = true;
                cfg
            }),
        },
        "fig6" => Preset {
            id: "fig6",
            figure: "two-scale valleys: decay timing changes convergence",
            params: "landscape=fig6_twovalley x0=(-20,3) eta=2.5->0.25@{650,700,750} +500 steps",
            kind: PresetKind::GdRuns(
                [650usize, 700, 750]
                    .into_iter()
                    .map(|decay| {
                        ExperimentConfig::new(
                            "fig6_twovalley",
                            vec![-20.0, 3.0],
                            vec![(0, 2.5), (decay, 0.25)],
                            decay + 500,
                        )
                    })
                    .collect(),
            ),
        },
        // the three magnitudes are implementer-chosen to span two orders,
        // giving a visibly 3-scale empirical loss
        "fig7-left" => Preset {
            id: "fig7-left",
            figure: "piecewise empirical loss vs uniform population loss",
            params: "data={0.5,3,20} population C=3 w in [-3,3]",
            kind: PresetKind::LossCurve1D {
                magnitudes: vec![0.5, 3.0, 20.0],
                population_c: 3.0,
                w_max: 3.0,
                samples: 1201,
            },
        },
        "fig7-right" => Preset {
            id: "fig7-right",
            figure: "2-D two-valley surface from scaled data",
            params: "population C=3 ratio=10 w in [-1,1]^2",
            kind: PresetKind::LossSurface2D {
                ratio: 10.0,
                population_c: 3.0,
                extent: 1.0,
                samples: 101,
            },
        },
        _ => return None,
    };
    Some(preset)
}
