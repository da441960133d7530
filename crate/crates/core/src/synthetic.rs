//! Seeded synthetic cohort with planted pathway signal.
//!
//! 60 patients (30 deceased, 30 alive) with one primary-tumor sample each, plus
//! a second primary sample for one patient and a normal-tissue sample for
//! another, over 200 genes. The fifteen planted genes are shifted between the
//! two outcome groups in the directions listed in [`PLANTED`]; nothing else is.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::models::{KRAS_TERM, NICOTINE_TERM};

pub const FIXTURE_SEED: u64 = 20_240_601;
pub const PATIENTS: usize = 60;
pub const GENES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// (term, gene, expression in the deceased group relative to the alive group).
pub const PLANTED: [(&str, &str, Direction); 15] = [
    (NICOTINE_TERM, "CACNA1A", Direction::Down),
    (NICOTINE_TERM, "GABRA2", Direction::Down),
    (NICOTINE_TERM, "GRIA2", Direction::Up),
    (NICOTINE_TERM, "GRIA1", Direction::Up),
    (KRAS_TERM, "COL2A1", Direction::Down),
    (KRAS_TERM, "SLC12A32", Direction::Down),
    (KRAS_TERM, "EPHA5", Direction::Down),
    (KRAS_TERM, "TENM2", Direction::Up),
    (KRAS_TERM, "SERPINA10", Direction::Up),
    (KRAS_TERM, "KRT13", Direction::Up),
    (KRAS_TERM, "KCNQ2", Direction::Up),
    (KRAS_TERM, "CDH16", Direction::Up),
    (KRAS_TERM, "KRT5", Direction::Up),
    (KRAS_TERM, "WNT16", Direction::Up),
    (KRAS_TERM, "SCGB1A1", Direction::Up),
];

const FOLD: f64 = 4.0;

pub fn planted_genes() -> Vec<&'static str> {
    PLANTED.iter().map(|p| p.1).collect()
}

pub fn planted_terms() -> [&'static str; 2] {
    [NICOTINE_TERM, KRAS_TERM]
}

fn background_gene(i: usize) -> String {
    format!("BG{i:03}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub clinical: String,
    pub expression: String,
    pub kegg: String,
    pub hallmark: String,
    pub config: String,
}

pub const FILES: [&str; 5] = [
    "clinical.tsv",
    "expression.tsv",
    "kegg.gmt",
    "hallmark.gmt",
    "config.toml",
];

impl Fixture {
    pub fn files(&self) -> [(&'static str, &str); 5] {
        [
            (FILES[0], &self.clinical),
            (FILES[1], &self.expression),
            (FILES[2], &self.kegg),
            (FILES[3], &self.hallmark),
            (FILES[4], &self.config),
        ]
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in self.files() {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

struct Patient {
    id: String,
    dead: bool,
    days: u32,
    stage: &'static str,
    t: &'static str,
    n: &'static str,
    m: &'static str,
    dimension: f64,
    morphology: &'static str,
    malignancy: &'static str,
    diagnosis: &'static str,
    cigarettes: Option<f64>,
    years: Option<u32>,
}

fn pick<R: Rng>(rng: &mut R, options: &[&'static str], weights: &[f64]) -> &'static str {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (o, w) in options.iter().zip(weights) {
        if x < *w {
            return o;
        }
        x -= w;
    }
    options[options.len() - 1]
}

fn patient<R: Rng>(rng: &mut R, i: usize) -> Patient {
    let dead = i.is_multiple_of(2);
    let days = if dead {
        rng.gen_range(60..1500)
    } else {
        rng.gen_range(300..3600)
    };
    let stage = if dead {
        pick(
            rng,
            &["Stage IA", "Stage IIB", "Stage IIIA", "Stage IV"],
            &[0.25, 0.3, 0.3, 0.15],
        )
    } else {
        pick(
            rng,
            &[
                "Stage IA",
                "Stage IB",
                "Stage IIA",
                "Stage IIIA",
                "Stage IV",
            ],
            &[0.35, 0.25, 0.2, 0.15, 0.05],
        )
    };
    let t = if dead {
        pick(rng, &["T1a", "T2", "T3", "T4"], &[0.25, 0.4, 0.2, 0.15])
    } else {
        pick(
            rng,
            &["T1a", "T1b", "T2", "T3", "TX"],
            &[0.3, 0.2, 0.35, 0.1, 0.05],
        )
    };
    let n = if dead {
        pick(rng, &["N0", "N1", "N2"], &[0.45, 0.3, 0.25])
    } else {
        pick(rng, &["N0", "N1", "N2", "NX"], &[0.7, 0.15, 0.1, 0.05])
    };
    let m = if dead {
        pick(rng, &["M0", "M1", "MX"], &[0.75, 0.15, 0.1])
    } else {
        pick(rng, &["M0", "M1", "MX"], &[0.85, 0.05, 0.1])
    };
    let diagnosis = pick(
        rng,
        &[
            "Adenocarcinoma, NOS",
            "Mucinous adenocarcinoma",
            "Papillary adenocarcinoma, NOS",
        ],
        &[0.6, 0.2, 0.2],
    );
    let morphology = match diagnosis {
        "Adenocarcinoma, NOS" => "8140/3",
        "Mucinous adenocarcinoma" => "8480/3",
        _ => "8260/3",
    };
    Patient {
        id: format!("P{:03}", i + 1),
        dead,
        days,
        stage,
        t,
        n,
        m,
        dimension: (rng.gen_range(0.2..2.0f64) * 10.0).round() / 10.0,
        morphology,
        malignancy: pick(rng, &["no", "yes"], &[0.8, 0.2]),
        diagnosis,
        cigarettes: rng
            .gen_bool(0.8)
            .then(|| (rng.gen_range(0.5..5.0f64) * 10.0).round() / 10.0),
        years: rng.gen_bool(0.75).then(|| rng.gen_range(5..60)),
    }
}

fn sample_id(patient: &str, suffix: &str) -> String {
    format!("TCGA-SY-{patient}-{suffix}")
}

fn clinical_row(out: &mut String, p: &Patient, sample: &str) {
    let (death, follow) = if p.dead {
        (p.days.to_string(), "--".to_string())
    } else {
        ("--".to_string(), p.days.to_string())
    };
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        p.id,
        sample,
        if p.dead { "Dead" } else { "Alive" },
        death,
        follow,
        p.stage,
        p.t,
        p.n,
        p.m,
        p.dimension,
        p.morphology,
        p.malignancy,
        p.diagnosis,
        p.cigarettes.map_or("--".to_string(), |c| c.to_string()),
        p.years.map_or("--".to_string(), |y| y.to_string()),
    );
}

pub fn generate(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patients: Vec<Patient> = (0..PATIENTS).map(|i| patient(&mut rng, i)).collect();

    // (sample id, patient index, sample type)
    let mut samples: Vec<(String, usize, &str)> = patients
        .iter()
        .enumerate()
        .map(|(i, p)| (sample_id(&p.id, "01A"), i, "Primary Tumor"))
        .collect();
    samples.push((sample_id(&patients[4].id, "01B"), 4, "Primary Tumor"));
    samples.push((sample_id(&patients[6].id, "11A"), 6, "Solid Tissue Normal"));

    let mut clinical = String::from(
        "patient_id\tsample_id\tvital_status\tdays_to_death\tdays_to_last_follow_up\tajcc_pathologic_stage\tajcc_pathologic_t\t\
         ajcc_pathologic_n\tajcc_pathologic_m\tdimension\tmorphology\tmalignancy\tprimary_diagnosis\tcigarettes_per_day\tyears_smoked\n",
    );
    for (id, p, _) in &samples {
        clinical_row(&mut clinical, &patients[*p], id);
    }

    let noise = Normal::new(0.0, 0.25).expect("valid sd");
    let mut gene_names: Vec<(String, Option<Direction>)> = Vec::with_capacity(GENES);
    let mut planted = PLANTED.iter();
    for i in 0..GENES {
        // spread planted genes through the matrix
        if i % 13 == 5 {
            if let Some((_, g, d)) = planted.next() {
                gene_names.push((g.to_string(), Some(*d)));
                continue;
            }
        }
        gene_names.push((background_gene(i), None));
    }

    let mut expression = String::from("gene");
    for (id, _, _) in &samples {
        expression.push('\t');
        expression.push_str(id);
    }
    expression.push_str("\nsample_type");
    for (_, _, kind) in &samples {
        expression.push('\t');
        expression.push_str(kind);
    }
    expression.push('\n');
    for (gene, direction) in &gene_names {
        let base: f64 = rng.gen_range(20.0..400.0);
        expression.push_str(gene);
        for (_, p, _) in &samples {
            let shift = match (direction, patients[*p].dead) {
                (Some(Direction::Up), true) => FOLD,
                (Some(Direction::Down), true) => 1.0 / FOLD,
                _ => 1.0,
            };
            let v = base * shift * f64::exp(noise.sample(&mut rng));
            let _ = write!(expression, "\t{v:.3}");
        }
        expression.push('\n');
    }

    let background: Vec<String> = gene_names
        .iter()
        .filter(|g| g.1.is_none())
        .map(|g| g.0.clone())
        .collect();
    let members = |term: &str| {
        PLANTED
            .iter()
            .filter(|p| p.0 == term)
            .map(|p| p.1.to_string())
            .collect::<Vec<_>>()
    };
    let gmt_line = |out: &mut String, term: &str, genes: &[String]| {
        let _ = writeln!(out, "{term}\tsynthetic\t{}", genes.join("\t"));
    };

    let mut kegg = String::new();
    let mut nicotine = members(NICOTINE_TERM);
    nicotine.extend(background[0..6].iter().cloned());
    gmt_line(&mut kegg, NICOTINE_TERM, &nicotine);
    let mut unrelated = background[6..18].to_vec();
    unrelated.push("NOT_MEASURED1".into());
    gmt_line(&mut kegg, "Focal adhesion", &unrelated);
    gmt_line(&mut kegg, "Calcium signaling pathway", &background[18..40]);
    gmt_line(
        &mut kegg,
        "Ribosome",
        &["NOT_MEASURED2".to_string(), "NOT_MEASURED3".to_string()],
    );

    let mut hallmark = String::new();
    let mut kras = members(KRAS_TERM);
    kras.extend(background[40..44].iter().cloned());
    gmt_line(&mut hallmark, KRAS_TERM, &kras);
    gmt_line(&mut hallmark, "Hypoxia", &background[44..70]);
    gmt_line(&mut hallmark, "Apoptosis", &background[70..90]);

    let config = "seed = 42\nk = 10\nlocale = \"dot\"\n\n[inputs]\nclinical = \"clinical.tsv\"\nexpression = \"expression.tsv\"\nout = \"out\"\n\n\
         [[inputs.libraries]]\nname = \"kegg\"\npath = \"kegg.gmt\"\n\n[[inputs.libraries]]\nname = \"hallmark\"\npath = \"hallmark.gmt\"\n\n\
         [deg]\nlog2_threshold = 1.0\nalpha = 0.05\npseudocount = 1.0\n\n[enrichment]\nalpha = 0.05\n"
        .to_string();

    Fixture {
        clinical,
        expression,
        kegg,
        hallmark,
        config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{
        build_cohort, default_rules, parse_clinical_str, parse_expression_str, ClinicalColumns,
        ImputationPolicy,
    };

    #[test]
    fn deterministic() {
        assert_eq!(generate(7), generate(7));
        assert_ne!(generate(7).expression, generate(8).expression);
    }

    #[test]
    fn cohort_shape() {
        let f = generate(FIXTURE_SEED);
        let records = parse_clinical_str(&f.clinical, &ClinicalColumns::default()).unwrap();
        let expr = parse_expression_str(&f.expression).unwrap();
        assert_eq!(expr.genes.len(), GENES);
        assert_eq!(expr.samples.len(), PATIENTS + 2);
        for g in planted_genes() {
            assert!(expr.gene_index(g).is_some(), "{g}");
        }
        let cohort = build_cohort(
            &records,
            &expr,
            &default_rules(),
            ImputationPolicy::default(),
        )
        .unwrap();
        assert_eq!(cohort.len(), PATIENTS);
        assert_eq!(cohort.provenance.non_primary_dropped, 1);
        assert_eq!(cohort.provenance.deduplicated, 1);
        assert_eq!(
            cohort.labels.iter().filter(|l| l.is_positive()).count(),
            PATIENTS / 2
        );
    }
}
