fn main() {
    for k in 0..=4u32 {
        let t0 = std::time::Instant::now();
        let gs = berezin_core::graph::enumerate_graphs(k);
        println!("k={k}: {} shapes in {:?}", gs.len(), t0.elapsed());
    }
}
