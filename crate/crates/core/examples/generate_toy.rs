//! Generates a toy instance and prints its shape and JSON encoding.
//!
//! `cargo run --example generate_toy -- 7 2 14`

use mirp::instance::generate_toy;

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let seed = args.first().copied().unwrap_or(1);
    let consumers = args.get(1).copied().unwrap_or(1) as usize;
    let horizon = args.get(2).copied().unwrap_or(12) as usize;

    let inst = generate_toy(seed, consumers, horizon).expect("valid toy parameters");
    println!("{}: {} ports, {} vessels, {} periods", inst.meta.name, inst.num_ports(), inst.num_vessels(), inst.horizon);
    for p in &inst.ports {
        println!(
            "  port {} {:?}: rate {:.1}, bounds [{:.1}, {:.1}], start {:.1}, berths {}",
            p.id, p.kind, p.rate[0], p.inv_min[0], p.inv_max[0], p.inv_init, p.berth_limit
        );
    }
    println!("{}", inst.to_json());
}
