use super::SelectorRequest;

const TEMPLATE: &str = "\
Given a 224×224 input image and the provided instruction, perform the following steps:
Instruction: {instruction}
Target Object Selection:
Identify the object in the image that best matches the instruction. If the target object is found, select it as the target object.
If the target object is not visible, select the most cost-effective object or object part considering ease of grasping, importance, and safety.
If the object has a handle or a part that is easier or safer to grasp, select the part. [for example the handle of a knife]
Consider the geometric shape of the objects and the gripper's success rate when selecting the target object or object part.
Output the name of the selected object or object part as [object:color and name] or [object part:color and name].
Round object means like ball. Cup is different from mug.
Cropping Box Calculation:
Calculate a cropping box that includes the target object and all surrounding objects that might be relevant for grasping.
Provide the coordinates of the cropping box in the format (top-left x, top-left y, bottom-right x, bottom-right y).
Object Properties within Cropping Box:
For each object within the cropping box, provide the following properties:
Grasping Score: Evaluate the ease or difficulty of grasping the object on a scale from 0 to 100 (0 being extremely difficult, 100 being extremely easy).
Preferred Grasping Location: Divide the cropping box into a 3×3 grid and return a number from 1 to 9 indicating the preferred grasping location (1 for top-left, 9 for bottom-right).
Additionally, consider the preferred grasping location that is most successful for the UR5 robotic arm and gripper.
Output should be in the following format:
Selected Object/Object Part: [object:color and name] or [object part:color and name]
Cropping Box Coordinates: (top-left x, top-left y, bottom-right x, bottom-right y)
Objects and Their Properties:
Object: [color and name]
Grasping Score: [value]
Preferred Grasping Location: [value]
";

/// The selection prompt with the request's instruction filled in. Prior
/// steps, if any, are appended so a remote model can adjust after each
/// grasp.
pub fn build_prompt(request: &SelectorRequest) -> String {
    let mut out = TEMPLATE.replace("{instruction}", request.instruction.trim());
    if !request.history.is_empty() {
        out.push_str(&format!("Previous attempts (step {}):\n", request.step_index));
        for h in &request.history {
            let result = if h.success { "grasped" } else { "failed" };
            out.push_str(&format!("- {}: {result}\n", h.selected));
        }
    }
    out
}
