//! Forward kinematics, Jacobians and manipulability of the default model.

use mdams::kinematics::{
    forward_kinematics, jacobian, manipulability, GeneralizedPose, RobotModel, Side,
};

fn main() {
    let model = RobotModel::default_profile();
    let mut pose = GeneralizedPose::from_base(-0.2, 0.4, 0.0);
    let fk = forward_kinematics(&model, &pose);
    println!("zero arms: right palm {:.3?}", fk.x_right().as_slice());
    println!("           left palm  {:.3?}", fk.x_left().as_slice());

    // Bend both elbows and lean the waist a little.
    pose.waist = [0.1, 0.0];
    pose.right_arm[3] = 1.2;
    pose.left_arm[3] = 1.2;
    let fk = forward_kinematics(&model, &pose);
    println!("bent arms: right palm {:.3?}", fk.x_right().as_slice());
    for side in [Side::Right, Side::Left] {
        let j = jacobian(&model, &pose, side);
        println!("{side:?} manipulability {:.4}", manipulability(&j));
    }
    for (i, p) in fk.control_points.0.iter().enumerate() {
        println!("control point {}: {:.3?}", i + 1, p.as_slice());
    }
}
