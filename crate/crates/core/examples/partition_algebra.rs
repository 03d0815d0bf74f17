//! Coagulation of partitions and the single-block encoding of merger events.

use lambda_flows::partition::{coag, decode_single_block, encode_single_block, Partition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pi = Partition::from_labels(&[0, 0, 1, 2, 2, 3])?;
    let sigma = Partition::from_labels(&[0, 1, 0, 2])?;
    println!("π = {pi}");
    println!("σ = {sigma}");
    println!("coag(π, σ) = {}", coag(&pi, &sigma)?);

    let event = encode_single_block(&[2, 4, 5], 6)?;
    println!("levels {{2,4,5}} of [6] -> {event} -> {:?}", decode_single_block(&event)?);
    Ok(())
}
