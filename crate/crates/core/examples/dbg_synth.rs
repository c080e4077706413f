fn main() {
    let spec = trackeval::synth::random_scenario("json", 5, &trackeval::synth::RandomScenarioParams::default());
    let text = serde_json::to_string_pretty(&spec).unwrap();
    let back: trackeval::synth::ScenarioSpec = serde_json::from_str(&text).unwrap();
    if back != spec {
        for (a, b) in format!("{spec:#?}").lines().zip(format!("{back:#?}").lines()) {
            if a != b { println!("ORIG: {a}\nBACK: {b}"); }
        }
    } else { println!("equal"); }
}
