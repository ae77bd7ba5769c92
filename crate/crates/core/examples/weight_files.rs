//! Writing and reading the model weight file and the binary feature file.

use rnnt_stream::{
    build_toy_model, synth_frames, FeatureFile, ToyModelSpec, ToyTransducer, TransducerModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("rnnt-weight-files");
    std::fs::create_dir_all(&dir)?;

    let model = build_toy_model(&ToyModelSpec::linear(4, 6, 5, 9))?;
    let model_path = dir.join("model.json");
    model.save(&model_path)?;
    let reloaded = ToyTransducer::load(&model_path)?;
    println!(
        "{} round trip exact: {}",
        model_path.display(),
        reloaded == model
    );

    let frames = synth_frames(120, model.feature_dim(), 10, 1);
    let features = FeatureFile::from_frames(&frames, model.feature_dim(), 10)?;
    let features_path = dir.join("features.rntf");
    features.save(&features_path)?;
    let back = FeatureFile::load(&features_path)?;
    println!(
        "{}: {} frames x {} dims at {} ms, {:.2} s of audio",
        features_path.display(),
        back.header.n_frames,
        back.header.feature_dim,
        back.header.frame_shift_ms,
        back.audio_seconds()
    );
    Ok(())
}
