//! The experiment phases: collect -> train-vae -> train-rbm -> eval ->
//! visualize. Each phase draws from its own stream `derive_rng(seed, label)`
//! and is reproducible on its own.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng as _;

use super::archive::{rbm_from_archive, rbm_to_archive, vae_from_archive, vae_to_archive, WeightArchive};
use super::config::RunConfig;
use super::ppm::{encode_ppm, heatmap, to_byte, upscale};
use crate::agents::{run_episode, Agent, MtrlAgent, RandomAgent, StrlAgent};
use crate::bonus::{compute_bonus, BonusField};
use crate::error::{Error, Result};
use crate::gridworld::{Environment, TaskVariant, WorldSpec};
use crate::metrics::{summarize, to_csv, EpisodeRecord, Summary};
use crate::numerics::Tensor;
use crate::rbm::{train_rbm, RbmModel};
use crate::rng::{derive_rng, Rng};
use crate::vae::{train_vae, VaeBatch, VaeModel};

pub const DATASET_FILE: &str = "dataset.mtgm";
pub const VAE_FILE: &str = "vae.mtgm";
pub const RBM_FILE: &str = "rbm.mtgm";
pub const VAE_LOSS_FILE: &str = "vae_loss.csv";
pub const RBM_LOSS_FILE: &str = "rbm_loss.csv";

/// End-of-episode snapshots from the random agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub batch: VaeBatch,
    pub variants: Vec<TaskVariant>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn to_archive(&self) -> WeightArchive {
        let mut ar = WeightArchive::new();
        for (i, v) in self.variants.iter().enumerate() {
            ar.push(format!("sample.{i:05}.image"), &self.batch.image(i));
            ar.push(format!("sample.{i:05}.mask"), &self.batch.mask(i));
            ar.push_values(format!("sample.{i:05}.variant"), &[v.index() as f64]);
        }
        ar
    }

    pub fn from_archive(ar: &WeightArchive) -> Result<Self> {
        if ar.is_empty() || !ar.len().is_multiple_of(3) {
            return Err(Error::Archive(format!(
                "dataset must hold image/mask/variant triples, found {} records",
                ar.len()
            )));
        }
        let n = ar.len() / 3;
        let mut pairs = Vec::with_capacity(n);
        let mut variants = Vec::with_capacity(n);
        for i in 0..n {
            let image = ar.tensor(&format!("sample.{i:05}.image"))?;
            let mask = ar.tensor(&format!("sample.{i:05}.mask"))?;
            let name = format!("sample.{i:05}.variant");
            let v = ar.values(&name, 1)?[0];
            if v != 0.0 && v != 1.0 {
                return Err(Error::Archive(format!("record `{name}`: variant must be 0 or 1, got {v}")));
            }
            pairs.push((image, mask));
            variants.push(TaskVariant::from_index(v as usize));
        }
        let batch = VaeBatch::from_pairs(&pairs).map_err(|e| Error::Archive(e.to_string()))?;
        Ok(Dataset { batch, variants })
    }

    pub fn split(&self, n_first: usize) -> (Dataset, Dataset) {
        let n_first = n_first.min(self.len());
        let head: Vec<usize> = (0..n_first).collect();
        let tail: Vec<usize> = (n_first..self.len()).collect();
        (
            Dataset { batch: self.batch.select(&head), variants: self.variants[..n_first].to_vec() },
            Dataset { batch: self.batch.select(&tail), variants: self.variants[n_first..].to_vec() },
        )
    }
}

/// Uniform variant draw for episode-level streams.
pub fn draw_variant(rng: &mut Rng) -> TaskVariant {
    TaskVariant::from_index(rng.random_range(0..2))
}

/// Runs `episodes` random-agent episodes with uniformly drawn variants and
/// keeps the masked view at each episode's end.
pub fn collect(world: &WorldSpec, episodes: usize, seed: u64) -> Result<Dataset> {
    let mut rng = derive_rng(seed, "collect");
    let mut agent = RandomAgent;
    let mut pairs = Vec::with_capacity(episodes);
    let mut variants = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let variant = draw_variant(&mut rng);
        let (mut env, obs) = Environment::reset(world, variant);
        agent.begin_episode();
        let mut last = obs;
        loop {
            let a = agent.act(&last, &mut rng)?;
            let step = env.step(a)?;
            last = step.observation;
            if step.done {
                break;
            }
        }
        pairs.push((last.image, last.mask));
        variants.push(variant);
    }
    Ok(Dataset { batch: VaeBatch::from_pairs(&pairs)?, variants })
}

pub fn train_vae_phase(cfg: &RunConfig, world: &WorldSpec, data: &Dataset) -> Result<(VaeModel, Vec<f64>)> {
    let mut rng = derive_rng(cfg.seed, "train-vae");
    let mut vae = VaeModel::new(cfg.vae_config(world.height, world.width), &mut rng)?;
    let log = train_vae(&mut vae, &data.batch, &cfg.vae_train, &mut rng)?;
    Ok((vae, log))
}

/// Encoder means of every sample, `[N, d]`.
pub fn encode_dataset(vae: &VaeModel, batch: &VaeBatch) -> Result<Tensor> {
    let rows = (0..batch.len())
        .map(|i| vae.encode(&batch.encoder_input(i)))
        .collect::<Result<Vec<_>>>()?;
    Tensor::stack(&rows)
}

pub fn train_rbm_phase(cfg: &RunConfig, vae: &VaeModel, data: &Dataset) -> Result<(RbmModel, Vec<f64>)> {
    let latents = encode_dataset(vae, &data.batch)?;
    let mut rng = derive_rng(cfg.seed, "train-rbm");
    let mut rbm = RbmModel::new(vae.config().latent_dim, cfg.rbm_hidden, cfg.rbm_sigma, &mut rng)?;
    let log = train_rbm(&mut rbm, &latents, &cfg.rbm_train, &mut rng)?;
    Ok((rbm, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Strl,
    Mtrl0,
    MtrlAlpha,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Strl, AgentKind::Mtrl0, AgentKind::MtrlAlpha];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Strl => "strl",
            AgentKind::Mtrl0 => "mtrl0",
            AgentKind::MtrlAlpha => "mtrl-alpha",
        }
    }

    pub fn needs_models(self) -> bool {
        self != AgentKind::Strl
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown agent `{s}` (strl|mtrl0|mtrl-alpha)")))
    }
}

/// Episode `i` draws its variant from `eval-variant/i` (shared by all
/// agents) and its actions from `eval/<agent>/i`.
pub fn evaluate(
    cfg: &RunConfig,
    world: &WorldSpec,
    kind: AgentKind,
    models: Option<(&VaeModel, &RbmModel)>,
) -> Result<Vec<EpisodeRecord>> {
    let mut agent: Box<dyn Agent + '_> = match (kind, models) {
        (AgentKind::Strl, _) => Box::new(StrlAgent::new(world.palette, cfg.plan, cfg.strl)),
        (AgentKind::Mtrl0, Some((vae, rbm))) => {
            Box::new(MtrlAgent::new(vae, rbm, world.palette, cfg.plan, None))
        }
        (AgentKind::MtrlAlpha, Some((vae, rbm))) => {
            Box::new(MtrlAgent::new(vae, rbm, world.palette, cfg.plan, Some(cfg.bonus)))
        }
        (_, None) => return Err(Error::invalid(format!("agent {} needs trained models", kind.name()))),
    };
    (0..cfg.eval_episodes)
        .map(|i| {
            let variant = draw_variant(&mut derive_rng(cfg.seed, &format!("eval-variant/{i}")));
            let mut rng = derive_rng(cfg.seed, &format!("eval/{}/{i}", kind.name()));
            Ok(run_episode(agent.as_mut(), world, variant, i, &mut rng)?.record)
        })
        .collect()
}

pub fn summary_line(kind: AgentKind, world: &WorldSpec, s: &Summary) -> String {
    format!(
        "{} on {}: {} episodes, mean reward {:.4}, mean length {:.2}, forced terminations {}",
        kind.name(),
        world.name,
        s.episodes,
        s.mean_reward,
        s.mean_length,
        s.forced
    )
}

/// Bonus field for the freshly reset episode (agent at the start).
pub fn start_bonus(cfg: &RunConfig, world: &WorldSpec, vae: &VaeModel) -> Result<BonusField> {
    let (_, obs) = Environment::reset(world, TaskVariant::A);
    compute_bonus(vae, &obs, &cfg.bonus)
}

/// First `k` principal axes of the rows of `x` (`[N, d]`), by power
/// iteration with deflation on the covariance.
pub fn principal_axes(x: &Tensor, k: usize) -> Result<Vec<Vec<f64>>> {
    let &[n, d] = x.dims() else {
        return Err(Error::shape(format!("principal_axes expects [N,d], got {:?}", x.dims())));
    };
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x.slab(i)[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let row = x.slab(i);
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n as f64);
    let mut axes = Vec::with_capacity(k);
    for axis in 0..k.min(d) {
        let mut v: Vec<f64> = (0..d).map(|j| 1.0 + (j + axis) as f64 * 0.1).collect();
        let mut lambda = 0.0;
        for _ in 0..1000 {
            let mut w: Vec<f64> = (0..d).map(|a| (0..d).map(|b| cov[a * d + b] * v[b]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = w;
            lambda = norm;
            if delta < 1e-12 {
                break;
            }
        }
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] -= lambda * v[a] * v[b];
            }
        }
        axes.push(v);
    }
    Ok(axes)
}

const BLUE: [u8; 3] = [31, 119, 180];
const RED: [u8; 3] = [214, 39, 40];
const BLACK: [u8; 3] = [0, 0, 0];
const WHITE: [u8; 3] = [255, 255, 255];

/// Latents projected on the first two principal axes: data in blue, RBM
/// samples in black, conditional means `E[v | h]` in red.
pub fn rbm_scatter(latents: &Tensor, rbm: &RbmModel, size: usize, rng: &mut Rng) -> Result<Vec<u8>> {
    let axes = principal_axes(latents, 2)?;
    let n = latents.dims()[0];
    let project = |v: &[f64]| -> (f64, f64) {
        let p = |ax: &Vec<f64>| ax.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        (p(&axes[0]), p(axes.get(1).unwrap_or(&axes[0])))
    };
    let mut points: Vec<((f64, f64), [u8; 3])> = Vec::new();
    for i in 0..n {
        points.push((project(latents.slab(i)), BLUE));
    }
    for i in 0..n {
        let h = rbm.sample_hidden(&latents.slab_tensor(i), rng)?;
        let v = rbm.sample_visible(&h, rng)?;
        points.push((project(v.data()), BLACK));
    }
    let nh = rbm.n_hidden();
    if nh <= 10 {
        for code in 0..1usize << nh {
            let h: Vec<u8> = (0..nh).map(|j| ((code >> j) & 1) as u8).collect();
            points.push((project(rbm.visible_conditional_mean(&h)?.data()), RED));
        }
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for ((x, y), _) in &points {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    let margin = 6.0;
    let scale = |v: f64, lo: f64, hi: f64| {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        (margin + t * (size as f64 - 2.0 * margin)).round() as isize
    };
    let mut px = vec![WHITE; size * size];
    for ((x, y), color) in points {
        let (cx, cy) = (scale(x, x0, x1), size as isize - 1 - scale(y, y0, y1));
        let radius = if color == RED { 3 } else { 1 };
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (xx, yy) = (cx + dx, cy + dy);
                if xx >= 0 && yy >= 0 && (xx as usize) < size && (yy as usize) < size {
                    px[yy as usize * size + xx as usize] = color;
                }
            }
        }
    }
    Ok(encode_ppm(size, size, &px))
}

fn image_pixels(img: &[f64], h: usize, w: usize) -> Vec<[u8; 3]> {
    let hw = h * w;
    (0..hw).map(|p| [to_byte(img[p]), to_byte(img[hw + p]), to_byte(img[2 * hw + p])]).collect()
}

/// One row per sample: masked input on the left, reconstruction on the
/// right, each scaled by `zoom`.
pub fn recon_grid(vae: &VaeModel, batch: &VaeBatch, rows: usize, zoom: usize) -> Result<Vec<u8>> {
    let (h, w) = (vae.config().height, vae.config().width);
    let rows = rows.min(batch.len());
    let (tw, th) = (w * zoom, h * zoom);
    let gap = zoom;
    let width = 2 * tw + 3 * gap;
    let height = rows * (th + gap) + gap;
    let mut px = vec![[128u8; 3]; width * height];
    for i in 0..rows {
        let input = batch.image(i);
        let recon = vae.decode(&vae.encode(&batch.encoder_input(i))?)?;
        for (col, img) in [input.data(), recon.data()].into_iter().enumerate() {
            let tile = upscale(w, h, &image_pixels(img, h, w), zoom);
            let (ox, oy) = (gap + col * (tw + gap), gap + i * (th + gap));
            for y in 0..th {
                let dst = (oy + y) * width + ox;
                px[dst..dst + tw].copy_from_slice(&tile[y * tw..(y + 1) * tw]);
            }
        }
    }
    Ok(encode_ppm(width, height, &px))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn loss_csv(column: &str, log: &[f64]) -> String {
    let mut out = format!("epoch,{column}\n");
    for (i, v) in log.iter().enumerate() {
        writeln!(out, "{},{v}", i + 1).expect("write to string");
    }
    out
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Loads `dataset.mtgm` from `out`.
pub fn load_dataset(out: &Path) -> Result<Dataset> {
    Dataset::from_archive(&WeightArchive::load(&out.join(DATASET_FILE))?)
}

pub fn load_models(out: &Path) -> Result<(VaeModel, RbmModel)> {
    let vae = vae_from_archive(&WeightArchive::load(&out.join(VAE_FILE))?)?;
    let rbm = rbm_from_archive(&WeightArchive::load(&out.join(RBM_FILE))?)?;
    if rbm.n_visible() != vae.config().latent_dim {
        return Err(Error::Archive(format!(
            "RBM has {} visible units but the VAE latent has {}",
            rbm.n_visible(),
            vae.config().latent_dim
        )));
    }
    Ok((vae, rbm))
}

pub fn cmd_collect(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let world = WorldSpec::load(&cfg.world)?;
    prepare_out(out)?;
    let data = collect(&world, cfg.collect_episodes, cfg.seed)?;
    let path = out.join(DATASET_FILE);
    data.to_archive().save(&path)?;
    Ok(path)
}

pub fn cmd_train_vae(cfg: &RunConfig, out: &Path) -> Result<Vec<f64>> {
    let world = WorldSpec::load(&cfg.world)?;
    let data = load_dataset(out)?;
    let (vae, log) = train_vae_phase(cfg, &world, &data)?;
    vae_to_archive(&vae).save(&out.join(VAE_FILE))?;
    write(&out.join(VAE_LOSS_FILE), loss_csv("loss", &log))?;
    Ok(log)
}

pub fn cmd_train_rbm(cfg: &RunConfig, out: &Path) -> Result<Vec<f64>> {
    let data = load_dataset(out)?;
    let vae = vae_from_archive(&WeightArchive::load(&out.join(VAE_FILE))?)?;
    let (rbm, log) = train_rbm_phase(cfg, &vae, &data)?;
    rbm_to_archive(&rbm).save(&out.join(RBM_FILE))?;
    write(&out.join(RBM_LOSS_FILE), loss_csv("recon_error", &log))?;
    Ok(log)
}

pub fn eval_file(kind: AgentKind) -> String {
    format!("eval_{}.csv", kind.name())
}

/// Writes `eval_<agent>.csv` and returns the summary line.
pub fn cmd_eval(cfg: &RunConfig, kind: AgentKind, out: &Path) -> Result<String> {
    let world = WorldSpec::load(&cfg.world)?;
    let models = if kind.needs_models() { Some(load_models(out)?) } else { None };
    prepare_out(out)?;
    let records = evaluate(cfg, &world, kind, models.as_ref().map(|(v, r)| (v, r)))?;
    write(&out.join(eval_file(kind)), to_csv(&records))?;
    Ok(summary_line(kind, &world, &summarize(&records)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visual {
    Jacobian,
    RbmClusters,
    VaeRecon,
}

impl Visual {
    pub fn file_name(self) -> &'static str {
        match self {
            Visual::Jacobian => "jacobian.ppm",
            Visual::RbmClusters => "rbm_clusters.ppm",
            Visual::VaeRecon => "vae_recon.ppm",
        }
    }
}

impl FromStr for Visual {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobian" => Ok(Visual::Jacobian),
            "rbm-clusters" => Ok(Visual::RbmClusters),
            "vae-recon" => Ok(Visual::VaeRecon),
            other => Err(Error::invalid(format!(
                "unknown visualization `{other}` (jacobian|rbm-clusters|vae-recon)"
            ))),
        }
    }
}

pub fn cmd_visualize(cfg: &RunConfig, what: Visual, out: &Path) -> Result<PathBuf> {
    let world = WorldSpec::load(&cfg.world)?;
    let path = out.join(what.file_name());
    let bytes = match what {
        Visual::Jacobian => {
            let vae = vae_from_archive(&WeightArchive::load(&out.join(VAE_FILE))?)?;
            let field = start_bonus(cfg, &world, &vae)?;
            heatmap(world.width, world.height, &field.values)
        }
        Visual::RbmClusters => {
            let (vae, rbm) = load_models(out)?;
            let latents = encode_dataset(&vae, &load_dataset(out)?.batch)?;
            rbm_scatter(&latents, &rbm, 256, &mut derive_rng(cfg.seed, "visualize"))?
        }
        Visual::VaeRecon => {
            let vae = vae_from_archive(&WeightArchive::load(&out.join(VAE_FILE))?)?;
            recon_grid(&vae, &load_dataset(out)?.batch, 8, 4)?
        }
    };
    write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_finds_dominant_axis() {
        let x = Tensor::from_vec(&[4, 2], vec![3.0, 0.1, -3.0, -0.1, 1.0, 0.0, -1.0, 0.0]).unwrap();
        let axes = principal_axes(&x, 2).unwrap();
        assert!(axes[0][0].abs() > 0.99);
        assert!(axes[1][1].abs() > 0.99);
        let dot: f64 = axes[0].iter().zip(&axes[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-6);
    }

    #[test]
    fn collect_snapshots_are_masked() {
        let w = WorldSpec::builtin("bw-e").unwrap();
        let d = collect(&w, 6, 5).unwrap();
        assert_eq!(d.len(), 6);
        for i in 0..d.len() {
            let img = d.batch.image(i);
            let m = d.batch.mask(i);
            let hw = w.cells();
            for ch in 0..3 {
                for p in 0..hw {
                    if m.data()[p] == 0.0 {
                        assert_eq!(img.data()[ch * hw + p], 0.0);
                    }
                }
            }
        }
        assert_eq!(Dataset::from_archive(&WeightArchive::from_bytes(&d.to_archive().to_bytes()).unwrap()).unwrap(), d);
    }

    #[test]
    fn agent_names_parse() {
        for k in AgentKind::ALL {
            assert_eq!(k.name().parse::<AgentKind>().unwrap(), k);
        }
        assert!("mtrl".parse::<AgentKind>().is_err());
        assert!("heat".parse::<Visual>().is_err());
    }
}
