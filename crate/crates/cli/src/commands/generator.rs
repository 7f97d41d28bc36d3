use std::fmt::Write as _;

use lve_core::generator::format::{load_generator_file, save_generator};
use lve_core::generator::{fixtures, generate, random_latents, LatentVector};
use lve_core::minutiae::extract;
use lve_core::synth::white_noise;

use super::{create_dir, require};
use crate::cli::{GenFixtureArgs, GenSampleArgs};
use crate::manifest::io_error;
use crate::{CliError, Ctx};

pub const FIXTURE_FILE: &str = "generator.lvw";

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn sample(args: &GenSampleArgs, ctx: &Ctx) -> Result<(), CliError> {
    let weights = require(&args.weights, "weights")?;
    let out = require(&args.out, "out")?;
    let model = load_generator_file(weights)?;
    let latents = match &args.latent {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            vec![LatentVector::from_csv(&text)?]
        }
        None => random_latents(model.latent_dim(), args.n, ctx.seed),
    };
    create_dir(out)?;

    let mut summary = String::from("name,source,minutiae\n");
    let mut generated = Vec::with_capacity(latents.len());
    for (i, z) in latents.iter().enumerate() {
        let img = generate(&model, z)?;
        let name = format!("sample_{i:02}");
        img.save_png(&out.join(format!("{name}.png")))?;
        write(&out.join(format!("{name}.csv")), &z.to_csv())?;
        let count = extract(&img).len();
        let _ = writeln!(summary, "{name},generated,{count}");
        generated.push(count);
    }
    // the same number of white-noise images as a control
    let (h, w) = model.output_shape();
    let mut noise = Vec::with_capacity(latents.len());
    for i in 0..latents.len() {
        let count = extract(&white_noise(w, h, ctx.seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64))).len();
        let _ = writeln!(summary, "noise_{i:02},noise,{count}");
        noise.push(count);
    }
    write(&out.join("summary.csv"), &summary)?;

    let stats = |v: &[usize]| {
        let mean = v.iter().sum::<usize>() as f64 / v.len().max(1) as f64;
        (mean, v.iter().copied().max().unwrap_or(0))
    };
    let ((gm, gx), (nm, nx)) = (stats(&generated), stats(&noise));
    println!("{:<10} {:>7} {:>14} {:>13}", "source", "images", "mean minutiae", "max minutiae");
    println!("{:<10} {:>7} {:>14.2} {:>13}", "generated", generated.len(), gm, gx);
    println!("{:<10} {:>7} {:>14.2} {:>13}", "noise", noise.len(), nm, nx);

    let mut inputs = vec![weights];
    if let Some(path) = &args.latent {
        inputs.push(path);
    }
    ctx.finish(out, &inputs)
}

pub fn fixture(args: &GenFixtureArgs, ctx: &Ctx) -> Result<(), CliError> {
    let out = require(&args.out, "out")?;
    if args.kind == "ridge" && (!args.size.is_multiple_of(2) || args.size < 16) {
        return Err(CliError::Usage(format!("--size {} must be even and at least 16", args.size)));
    }
    let model = match args.kind.as_str() {
        "ridge" => fixtures::ridge_generator(ctx.seed, args.size),
        "canonical" => fixtures::canonical_generator(ctx.seed),
        "tiny" => fixtures::tiny_generator(),
        "random" => fixtures::random_architecture(ctx.seed),
        other => {
            return Err(CliError::Usage(format!(
                "unknown fixture kind {other:?}; expected ridge, canonical, tiny or random"
            )))
        }
    };
    create_dir(out)?;
    let path = out.join(FIXTURE_FILE);
    save_generator(&model, &path)?;
    let (h, w) = model.output_shape();
    println!(
        "{} generator: latent {} -> {w}x{h}, {} layers, {} parameters -> {}",
        args.kind,
        model.latent_dim(),
        model.layers().len(),
        model.parameter_count(),
        path.display()
    );
    ctx.finish(out, &[])
}
