fn main() {
    println!("halfsurf");
}
